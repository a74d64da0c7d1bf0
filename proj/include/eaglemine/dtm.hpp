#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaglemine/histogram.hpp"
#include "eaglemine/waterlevel.hpp"

namespace eaglemine {

/// Parameters of one digitized truncated Gaussian: a bivariate normal
/// restricted to the positive quadrant of the (row, col) feature plane and
/// integrated over unit grid cells.
struct DtmParams {
    double mu_r = 0.0;
    double mu_c = 0.0;
    double s_rr = 1.0;  // covariance of the row coordinate
    double s_rc = 0.0;
    double s_cc = 1.0;
};

enum class ModelKind { single, mixture2 };

struct DtmModel {
    ModelKind kind = ModelKind::single;
    DtmParams comp[2];  // comp[1] is meaningful for mixture2 only
    std::int64_t n = 0;
    int island_id = -1;
    bool converged = true;
    bool collapsed = false;  // a mixture component degenerated and was restarted
    bool forced = false;     // kept as a leaf despite a rejected shape test

    std::string to_json() const;
    static DtmModel from_json(const std::string& text);
};

/// Cells a model is fitted on plus per-cell weights: raw heights during the
/// search, responsibility-scaled heights inside the mixture loop.
struct IslandSample {
    std::vector<Cell> cells;
    std::vector<double> weights;
};

/// Island cells plus the expansion ring, weighted by histogram heights.
IslandSample island_sample(const Island& isl, const Histogram& h);

/// P(a point of the model digitizes into `cell`): bivariate normal rectangle
/// mass over the positive-quadrant mass. Throws DegenerateError when the
/// covariance is not positive definite.
double cell_probability(const DtmParams& p, const Cell& cell);
double model_cell_probability(const DtmModel& m, const Cell& cell);  // mixture-aware

/// Batch form of cell_probability sharing corner CDF evaluations across the
/// cells' bounding box; falls back to per-cell evaluation when the cells are
/// too scattered for the dense corner grid to pay off.
std::vector<double> cell_probabilities(const DtmParams& p, const std::vector<Cell>& cells);
std::vector<double> model_cell_probabilities(const DtmModel& m, const std::vector<Cell>& cells);

/// Mean per-point log-likelihood of a single model on a sample, optionally
/// with the analytic gradient in the optimizer's coordinates
/// theta = (mu_r, mu_c, log l11, l21, log l22), L the lower Cholesky factor of
/// the covariance. Cells whose rectangle mass underflows fall back to a
/// midpoint-density approximation so the gradient stays informative in tails.
double single_objective(const DtmParams& p, const IslandSample& s, double grad[5]);

struct FitOptions {
    int max_iters = 500;
    double grad_tol = 1e-6;  // on the mean log-likelihood scale
};

struct FitResult {
    DtmParams params;
    bool converged = false;
    int iterations = 0;
    double mean_loglik = 0.0;
};

/// Quasi-Newton ascent from moment-matched starting values. Needs at least 3
/// distinct positive-weight cells, else throws DegenerateError.
FitResult fit_single(const IslandSample& s, const FitOptions& opt = {});
FitResult fit_single_from(const DtmParams& init, const IslandSample& s, const FitOptions& opt = {});

struct MixtureOptions {
    int max_outer = 80;
    double ll_tol = 1e-8;  // relative improvement cutoff on the data log-likelihood
    FitOptions inner{60, 1e-7};
};

struct MixtureFit {
    DtmParams comp[2];
    bool converged = false;
    bool collapsed = false;
    int iterations = 0;
    double loglik = 0.0;            // sum of w * log(equal-weight mixture probability)
    std::vector<double> ll_trace;   // log-likelihood before each M step
};

/// Equal-weight two-component fit via expectation-maximization; the M step
/// warm-starts each component's ascent from its current parameters, so the
/// data log-likelihood never decreases (up to 1e-9 roundoff). Initialization
/// splits the sample across its weighted major axis; no randomness anywhere.
MixtureFit fit_mixture(const IslandSample& s, const MixtureOptions& opt = {});

/// Point count the model stands for: the total sample weight.
std::int64_t estimate_n(const IslandSample& s);

/// Positive integer minimizing sum_g |N * P(g) - w_g| over the sample cells;
/// a diagnostic for how far the mass-based choice sits from the L1 optimum.
std::int64_t l1_optimal_n(const DtmModel& m, const IslandSample& s);

/// sum_g w_g * log P(g), probabilities floored at 1e-300 (sets *floored).
double log_likelihood(const DtmModel& m, const IslandSample& s, bool* floored = nullptr);

}  // namespace eaglemine
