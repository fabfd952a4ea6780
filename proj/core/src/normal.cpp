#include "kmax/normal.hpp"

#include <cmath>

namespace kmax {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2 pi)
constexpr double kInvSqrt2 = 0.7071067811865475244;    // 1/sqrt(2)
}  // namespace

double norm_pdf(double y) {
    return kInvSqrt2Pi * std::exp(-0.5 * y * y);
}

double norm_cdf(double y) {
    return 0.5 * std::erfc(-y * kInvSqrt2);
}

double norm_upper(double y) {
    return 0.5 * std::erfc(y * kInvSqrt2);
}

double mills_ratio(double y) {
    if (y <= 8.0) {
        return norm_pdf(y) / norm_upper(y);
    }
    // Laplace continued fraction: M(y) = y + 1/(y + 2/(y + 3/(y + ...))).
    // Converges rapidly for large y; 64 levels is far more than needed at y > 8.
    double t = 0.0;
    for (int j = 64; j >= 1; --j) {
        t = static_cast<double>(j) / (y + t);
    }
    return y + t;
}

}  // namespace kmax
