#include "tailar/special.hpp"

#include <cmath>

#include "tailar/errors.hpp"

namespace tailar {

double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw ConfigError("digamma is only defined here for finite x > 0");
    }
    double shift = 0.0;
    while (x < 6.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    // psi(x) ~ log x - 1/(2x) - sum_k B_{2k} / (2k x^{2k})
    const double r = 1.0 / (x * x);
    const double series =
        r * (1.0 / 12.0 -
             r * (1.0 / 120.0 -
                  r * (1.0 / 252.0 -
                       r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    return shift + std::log(x) - 0.5 / x - series;
}

}  // namespace tailar
