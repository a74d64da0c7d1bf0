#pragma once

namespace eaglemine {

double norm_pdf(double x);
double norm_cdf(double x);

/// P(X > h, Y > k) for a standard bivariate normal pair with correlation rho.
/// Drezner-Wesolowsky style Gauss-Legendre quadrature on the correlation
/// integral, with the transformed high-|rho| branch; absolute error ~1e-15.
double bvn_upper(double h, double k, double rho);

/// P(X < h, Y < k).
inline double bvn_cdf(double h, double k, double rho) { return bvn_upper(-h, -k, rho); }

/// Standard bivariate normal density at (u, v).
double bvn_pdf(double u, double v, double rho);

/// CDF value at a standardized corner together with its partials. A corner
/// coordinate may sit at +infinity (quadrant/edge rectangles); the partials
/// with respect to an infinite coordinate, and to rho if either is infinite,
/// are zero.
struct CornerEval {
    double val = 0.0;
    double du = 0.0;  // d/du of P(X < u, Y < v)
    double dv = 0.0;
    double dr = 0.0;  // d/drho, the density itself
};

CornerEval bvn_corner(double u, bool u_inf, double v, bool v_inf, double rho);

}  // namespace eaglemine
