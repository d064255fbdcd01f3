#pragma once

namespace tailar {

/// Digamma function for x > 0: upward recurrence to x >= 6, then the
/// asymptotic series. Absolute error below 1e-12 on (0, inf).
double digamma(double x);

}  // namespace tailar
