#include "eaglemine/bvn.hpp"

#include <algorithm>
#include <cmath>

namespace eaglemine {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
}  // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double bvn_pdf(double u, double v, double rho) {
    double d = 1.0 - rho * rho;
    if (d <= 0.0) return 0.0;
    return std::exp(-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * d)) / (kTwoPi * std::sqrt(d));
}

double bvn_upper(double h, double k, double rho) {
    // Gauss-Legendre nodes/weights: 6, 12 and 20 point rules (half, symmetric).
    static const double w6[3] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910};
    static const double x6[3] = {0.9324695142031521, 0.6612093864662645, 0.2386191860831969};
    static const double w12[6] = {0.04717533638651183, 0.1069393259953184, 0.1600783285433462,
                                  0.2031674267230659,  0.2334925365383548, 0.2491470458134028};
    static const double x12[6] = {0.9815606342467192, 0.9041172563704749, 0.7699026741943047,
                                  0.5873179542866175, 0.3678314989981802, 0.1252334085114689};
    static const double w20[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                   0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                   0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                   0.1527533871307259};
    static const double x20[10] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                   0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                   0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                   0.07652652113349733};

    rho = std::clamp(rho, -1.0 + 1e-15, 1.0 - 1e-15);
    const double* w;
    const double* x;
    int ng;
    double ar = std::fabs(rho);
    if (ar < 0.3) {
        w = w6;
        x = x6;
        ng = 3;
    } else if (ar < 0.75) {
        w = w12;
        x = x12;
        ng = 6;
    } else {
        w = w20;
        x = x20;
        ng = 10;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (ar < 0.925) {
        double hs = (h * h + k * k) / 2.0;
        double asr = std::asin(rho);
        for (int i = 0; i < ng; ++i)
            for (int is = -1; is <= 1; is += 2) {
                double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        bvn = bvn * asr / (2.0 * kTwoPi) + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if (rho < 0.0) {
            k = -k;
            hk = -hk;
        }
        {
            double as = (1.0 - rho) * (1.0 + rho);
            double a = std::sqrt(as);
            double bs = (h - k) * (h - k);
            double c = (4.0 - hk) / 8.0;
            double d = (12.0 - hk) / 16.0;
            double asr = -(bs / as + hk) / 2.0;
            if (asr > -100.0)
                bvn = a * std::exp(asr) *
                      (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
            if (-hk < 100.0) {
                double b = std::sqrt(bs);
                bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
                       (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for (int i = 0; i < ng; ++i)
                for (int is = -1; is <= 1; is += 2) {
                    double xi = a * (is * x[i] + 1.0);
                    double xs = xi * xi;
                    double rs = std::sqrt(1.0 - xs);
                    double asr1 = -(bs / xs + hk) / 2.0;
                    if (asr1 > -100.0) {
                        double sp = 1.0 + c * xs * (1.0 + d * xs);
                        double ep = std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
                        bvn += a * w[i] * std::exp(asr1) * (ep - sp);
                    }
                }
            bvn = -bvn / kTwoPi;
        }
        if (rho > 0.0) {
            bvn += norm_cdf(-std::max(h, k));
        } else {
            bvn = -bvn;
            if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

CornerEval bvn_corner(double u, bool u_inf, double v, bool v_inf, double rho) {
    CornerEval e;
    if (u_inf && v_inf) {
        e.val = 1.0;
        return e;
    }
    if (u_inf) {
        e.val = norm_cdf(v);
        e.dv = norm_pdf(v);
        return e;
    }
    if (v_inf) {
        e.val = norm_cdf(u);
        e.du = norm_pdf(u);
        return e;
    }
    e.val = bvn_cdf(u, v, rho);
    double d = std::sqrt(std::max(1.0 - rho * rho, 1e-30));
    e.du = norm_pdf(u) * norm_cdf((v - rho * u) / d);
    e.dv = norm_pdf(v) * norm_cdf((u - rho * v) / d);
    e.dr = bvn_pdf(u, v, rho);
    return e;
}

}  // namespace eaglemine
