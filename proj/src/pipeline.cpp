#include "eaglemine/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "eaglemine/errors.hpp"

namespace eaglemine {

namespace {

nlohmann::json axis_json(const AxisConfig& a) {
    return {{"feature", a.feature},
            {"base", a.base},
            {"bins_per_decade", a.bins_per_decade},
            {"vmin", a.vmin},
            {"auto_vmin", a.auto_vmin}};
}

}  // namespace

std::string PipelineConfig::to_json() const {
    nlohmann::json j;
    j["x_axis"] = axis_json(x_axis);
    j["y_axis"] = axis_json(y_axis);
    j["level_step"] = level_step;
    j["single_fit"] = {{"max_iters", single_fit.max_iters}, {"grad_tol", single_fit.grad_tol}};
    j["mixture_fit"] = {{"max_outer", mixture_fit.max_outer},
                        {"ll_tol", mixture_fit.ll_tol},
                        {"inner_max_iters", mixture_fit.inner.max_iters},
                        {"inner_grad_tol", mixture_fit.inner.grad_tol}};
    j["stitch_fit"] = {{"max_iters", stitch_fit.max_iters}, {"grad_tol", stitch_fit.grad_tol}};
    j["ad_critical"] = kAdCritical1pc;
    j["outlier_probability"] = kOutlierProbability;
    return j.dump();
}

MineResult mine_histogram(const Histogram& h, const PipelineConfig& cfg) {
    MineResult res;
    res.tree = build_tree(h, cfg.level_step);
    contract(res.tree);
    prune(res.tree);
    expand(res.tree, h);

    SearchOptions sopt;
    sopt.single_fit = cfg.single_fit;
    sopt.mixture_fit = cfg.mixture_fit;
    sopt.workers = cfg.workers;
    res.search = search(res.tree, h, sopt);
    stitch(res.search, h, cfg.stitch_fit);
    res.summary = summarize(res.search, h, cfg.to_json());
    return res;
}

void write_heatmap_csv(const Histogram& h, const std::string& path,
                       const std::vector<std::string>& preamble) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write heatmap: " + path);
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "row,col,height\n";
    for (int r = 0; r < h.rows; ++r)
        for (int c = 0; c < h.cols; ++c)
            if (h.at(r, c) > 0) out << r << ',' << c << ',' << h.at(r, c) << '\n';
}

void write_labels_csv(const Summary& s, const std::string& path,
                      const std::vector<std::string>& preamble) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write labels: " + path);
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "row,col,cluster\n";
    for (int r = 0; r < s.rows; ++r)
        for (int c = 0; c < s.cols; ++c) {
            std::int32_t l = s.labels[std::size_t(r) * s.cols + c];
            if (l != kLabelEmpty) out << r << ',' << c << ',' << l << '\n';
        }
}

void write_node_labels(const Summary& s, const CellMap& map, const std::string& path,
                       const std::vector<std::string>& preamble) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write node labels: " + path);
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "node_id\tcluster\n";
    for (std::size_t i = 0; i < map.ids.size(); ++i) {
        const Cell& c = map.cells[i];
        if (c.r < 0 || c.r >= s.rows || c.c < 0 || c.c >= s.cols) continue;
        std::int32_t l = s.labels[std::size_t(c.r) * s.cols + c.c];
        if (l == kLabelEmpty) continue;  // stale map; nothing sensible to emit
        out << map.ids[i] << '\t' << l << '\n';
    }
}

std::vector<NodeScore> rank_nodes(const Summary& s, const CellMap& map, const FeatureTable* feats,
                                  const std::string& rank_by) {
    const std::vector<double>* col = nullptr;
    if (feats && !rank_by.empty()) {
        col = feats->find(rank_by);
        if (!col) throw StructuralError("rank feature '" + rank_by + "' not in table");
        if (feats->ids != map.ids)
            throw StructuralError("feature table and cell map list different nodes");
    }
    std::vector<NodeScore> out;
    out.reserve(map.ids.size());
    for (std::size_t i = 0; i < map.ids.size(); ++i) {
        const Cell& c = map.cells[i];
        if (c.r < 0 || c.r >= s.rows || c.c < 0 || c.c >= s.cols) continue;
        std::int32_t l = s.labels[std::size_t(c.r) * s.cols + c.c];
        if (l == kLabelEmpty) continue;
        NodeScore ns;
        ns.id = map.ids[i];
        ns.cluster = l;
        ns.score = l >= 0 ? s.suspiciousness[std::size_t(l)] : 0.0;
        ns.tiebreak = col ? (*col)[i] : 0.0;
        out.push_back(std::move(ns));
    }
    std::stable_sort(out.begin(), out.end(), [](const NodeScore& a, const NodeScore& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.tiebreak != b.tiebreak) return a.tiebreak > b.tiebreak;
        return a.id < b.id;
    });
    return out;
}

void write_node_scores(const std::vector<NodeScore>& ranked, const std::string& path,
                       const std::vector<std::string>& preamble) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write node scores: " + path);
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "node_id\tcluster\tscore\ttiebreak\n";
    char buf[40];
    for (const NodeScore& ns : ranked) {
        out << ns.id << '\t' << ns.cluster << '\t';
        std::snprintf(buf, sizeof buf, "%.17g", ns.score);
        out << buf << '\t';
        std::snprintf(buf, sizeof buf, "%.17g", ns.tiebreak);
        out << buf << '\n';
    }
}

}  // namespace eaglemine
