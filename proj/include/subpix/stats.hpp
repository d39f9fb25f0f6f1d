#pragma once

namespace subpix {

/// Standard normal upper tail Q(x) = P(N(0,1) > x).
double normal_tail(double x);
/// Inverse of normal_tail for p in (0, 1).
double normal_tail_inverse(double p);

}  // namespace subpix
