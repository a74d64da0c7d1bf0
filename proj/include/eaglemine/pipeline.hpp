#pragma once

#include <string>
#include <vector>

#include "eaglemine/eaglemine.hpp"
#include "eaglemine/histogram.hpp"
#include "eaglemine/mdl.hpp"

namespace eaglemine {

/// Knobs for one mining run. Only statistically meaningful settings land in
/// the config echo, so outputs are byte-identical across worker counts.
struct PipelineConfig {
    AxisConfig x_axis, y_axis;   // informational when mining a prebuilt histogram
    double level_step = 0.0;     // <= 0 picks log(max height)/20
    FitOptions single_fit{};
    MixtureOptions mixture_fit{};
    FitOptions stitch_fit{};
    int workers = 1;

    std::string to_json() const;  // stable key order
};

struct MineResult {
    WaterLevelTree tree;  // after contract/prune/expand
    SearchResult search;
    Summary summary;
};

/// Full pass over a histogram: water-level tree, refinement, model search,
/// stitching, labeling and scoring.
MineResult mine_histogram(const Histogram& h, const PipelineConfig& cfg);

/// row,col,height CSV of the non-empty cells (plot-friendly export).
void write_heatmap_csv(const Histogram& h, const std::string& path,
                       const std::vector<std::string>& preamble = {});

/// row,col,cluster CSV of all labeled cells; outliers are -1.
void write_labels_csv(const Summary& s, const std::string& path,
                      const std::vector<std::string>& preamble = {});

/// node_id<TAB>cluster for every mapped node (cluster -1 = outlier cell).
void write_node_labels(const Summary& s, const CellMap& map, const std::string& path,
                       const std::vector<std::string>& preamble = {});

struct NodeScore {
    std::string id;
    int cluster = -1;     // -1 for outlier cells
    double score = 0.0;   // suspiciousness of the owning cluster
    double tiebreak = 0.0;
};

/// Nodes ordered by cluster suspiciousness, then by the `rank_by` feature
/// value, then by node id. Pass an empty rank_by (or a null table) to skip the
/// feature tiebreak.
std::vector<NodeScore> rank_nodes(const Summary& s, const CellMap& map, const FeatureTable* feats,
                                  const std::string& rank_by);

void write_node_scores(const std::vector<NodeScore>& ranked, const std::string& path,
                       const std::vector<std::string>& preamble = {});

}  // namespace eaglemine
