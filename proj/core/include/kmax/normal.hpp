#pragma once

namespace kmax {

/// Standard normal density.
double norm_pdf(double y);

/// Standard normal CDF, erfc-based.
double norm_cdf(double y);

/// Upper tail 1 - Phi(y), accurate far into the tail.
double norm_upper(double y);

/// Mills ratio phi(y) / (1 - Phi(y)). Switches to the Laplace continued
/// fraction for y > 8 where pdf and tail both underflow.
double mills_ratio(double y);

}  // namespace kmax
