#pragma once

namespace smallnoise {

// Inverse of the standard normal CDF (Wichura's PPND16 rational
// approximation, accurate to ~1e-16 relative). Defined on (0,1).
double inverse_normal_cdf(double p);

// Standard normal CDF via erfc.
double normal_cdf(double x);

} // namespace smallnoise
