#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaglemine/adtest.hpp"
#include "eaglemine/dtm.hpp"
#include "eaglemine/histogram.hpp"
#include "eaglemine/waterlevel.hpp"

namespace eaglemine {

/// Term each island tries first. The root and, below it, the chain of
/// largest-mass children carry the equal-weight two-component mixture (they
/// stand for the dominant multi-mode base region); every other island gets the
/// single Gaussian. Indexed by node id; dead nodes keep a default entry.
std::vector<ModelKind> assign_vocabulary_terms(const WaterLevelTree& t);

struct AxisShapeTest {
    double a2_star = 0.0;
    bool rejected = false;
    bool too_small = false;
    bool degenerate = false;
};

struct ShapeTestResult {
    std::vector<AxisShapeTest> axes;  // two per tested component
    bool rejected = false;
    bool too_small = false;  // a component had < 8 cells and was skipped
};

/// Normality screen on an island's binary footprint: cell centers are
/// projected on the principal axes of their coordinate covariance and each
/// projection runs through the composite normality test. For a mixture term
/// the cells are first split by higher-responsibility component and each part
/// is screened on its own axes; the island passes only if every tested axis
/// does. `comps` supplies the fitted components for the responsibility split
/// (may be null for single terms).
ShapeTestResult island_shape_test(const std::vector<Cell>& cells, ModelKind kind,
                                  const DtmParams* comps);

struct FittedCluster {
    DtmModel model;
    IslandSample sample;
    ShapeTestResult shape;
};

struct SearchOptions {
    FitOptions single_fit{};
    MixtureOptions mixture_fit{};
    int workers = 1;
};

struct SearchResult {
    std::vector<FittedCluster> clusters;
    std::vector<int> skipped_islands;  // islands whose fit was too degenerate
};

/// Breadth-first descent: fit each island's term, keep the island when the
/// shape screen accepts it (its subtree stays unexplored), otherwise push its
/// children. A rejected leaf is still kept, marked forced, so every branch
/// ends in some model. Accepted islands form an antichain of the tree.
SearchResult search(const WaterLevelTree& t, const Histogram& h, const SearchOptions& opt = {});

/// Greedy merge pass over single-Gaussian clusters whose footprints touch
/// (8-adjacency). The pair costing the least average log-likelihood per point
/// is merged first, and only merges whose joint footprint passes the shape
/// screen are allowed.
void stitch(SearchResult& sr, const Histogram& h, const FitOptions& opt = {});

/// A cell belongs to the cluster with the highest expected count n * P among
/// clusters whose cell probability clears this floor; a cell every cluster
/// rates below the floor is an outlier.
constexpr double kOutlierProbability = 1e-5;

constexpr std::int32_t kLabelOutlier = -1;
constexpr std::int32_t kLabelEmpty = -2;

struct Summary {
    int rows = 0, cols = 0;
    std::vector<DtmModel> models;
    int main_model = -1;           // index into models, -1 when none
    bool main_is_fallback = false;  // no mixture survived; largest-n single stands in
    std::vector<double> suspiciousness;  // per model; 0 for the main model
    std::vector<std::int32_t> labels;    // row-major rows*cols
    std::vector<Cell> outlier_cells;
    std::string config_echo;  // JSON object describing the run configuration

    std::string to_json(int indent = 2) const;
    static Summary from_json(const std::string& text);
};

/// Labels every non-empty cell, designates the main model (the mixture, or the
/// largest-n single as a flagged fallback) and scores each cluster by
/// n * KL(cluster distribution || main distribution). The divergence is summed
/// over the grid extended far enough around each cluster to hold its mass, so
/// scores are nonnegative; the main model scores exactly 0.
Summary summarize(const SearchResult& sr, const Histogram& h, const std::string& config_echo);

}  // namespace eaglemine
