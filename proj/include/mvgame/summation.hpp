#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace mvgame {

// Compensated sum of the terms after sorting them in place. The result
// depends only on the multiset of terms, so relabelling atoms of a measure
// never changes an expectation, not even in the last bit.
inline double order_free_sum(std::span<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double carry = 0.0;
  for (double v : terms) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

}  // namespace mvgame
