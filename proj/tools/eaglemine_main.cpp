// eaglemine: graph micro-cluster mining on log-log feature histograms.
//
// Subcommands:
//   features   edge list -> per-node feature TSV
//   mine       feature TSV or histogram -> cluster summary, labels, scores
//   mdl        description length of a summary against its histogram
//   tree       water-level island hierarchy of a histogram
//   score      rank nodes by cluster suspiciousness
//
// Exit codes: 0 success, 1 pipeline error, 2 usage or I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eaglemine/eaglemine.hpp"
#include "eaglemine/errors.hpp"
#include "eaglemine/features.hpp"
#include "eaglemine/graph.hpp"
#include "eaglemine/histogram.hpp"
#include "eaglemine/mdl.hpp"
#include "eaglemine/pipeline.hpp"
#include "eaglemine/waterlevel.hpp"

namespace em = eaglemine;
using nlohmann::json;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw em::ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw em::ParseError("cannot write file: " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

/// Worker count from EAGLEMINE_WORKERS when --workers is not given.
int env_workers() {
    const char* s = std::getenv("EAGLEMINE_WORKERS");
    if (!s || !*s) return 1;
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096)
        throw em::ParseError(std::string("EAGLEMINE_WORKERS must be a positive integer, got '") +
                             s + "'");
    return static_cast<int>(v);
}

// ---------------------------------------------------------------- features --

struct FeaturesArgs {
    std::string in, out;
    std::string mode = "homogeneous";
    std::string ids = "shared";
    std::string side = "src";
    std::vector<std::string> compute{"degree"};
    double damping = 0.85;
    double pr_tol = 1e-10;
    int pr_iters = 200;
    double hits_tol = 1e-12;
    int hits_iters = 500;
};

json features_config(const FeaturesArgs& a) {
    json j;
    j["command"] = "features";
    j["in"] = a.in;
    j["mode"] = a.mode;
    j["bipartite_ids"] = a.ids;
    j["side"] = a.side;
    j["compute"] = a.compute;
    j["damping"] = a.damping;
    j["pr_tol"] = a.pr_tol;
    j["pr_iters"] = a.pr_iters;
    j["hits_tol"] = a.hits_tol;
    j["hits_iters"] = a.hits_iters;
    return j;
}

int cmd_features(const FeaturesArgs& a) {
    em::GraphMode mode =
        a.mode == "bipartite" ? em::GraphMode::bipartite : em::GraphMode::homogeneous;
    em::BipartiteIds ids = a.ids == "split" ? em::BipartiteIds::split : em::BipartiteIds::shared;
    em::Side side = a.side == "dst" ? em::Side::dst : em::Side::src;
    bool bip = mode == em::GraphMode::bipartite;

    em::Graph g = em::load_edge_list(a.in, mode, ids);

    em::FeatureTable t;
    t.ids = bip && side == em::Side::dst ? g.dst_names() : g.src_names();

    std::optional<em::HubAuthResult> hits;
    auto hits_result = [&]() -> const em::HubAuthResult& {
        if (!hits) hits = em::hubness_authority(g, a.hits_tol, a.hits_iters);
        return *hits;
    };

    for (const std::string& name : a.compute) {
        if (t.find(name)) throw em::ParseError("feature '" + name + "' requested twice");
        if (name == "degree") {
            t.add(name, em::degrees(g, em::Direction::total, side));
        } else if (name == "in_degree") {
            t.add(name, em::degrees(g, em::Direction::in, side));
        } else if (name == "out_degree") {
            t.add(name, em::degrees(g, em::Direction::out, side));
        } else if (name == "pagerank") {
            t.add(name, em::pagerank(g, a.damping, a.pr_tol, a.pr_iters).scores);
        } else if (name == "hubness") {
            if (bip && side != em::Side::src)
                throw em::StructuralError("hubness scores source nodes; use --side src");
            t.add(name, hits_result().hub);
        } else if (name == "authority") {
            if (bip && side != em::Side::dst)
                throw em::StructuralError("authority scores target nodes; use --side dst");
            t.add(name, hits_result().auth);
        } else if (name == "triangles") {
            t.add(name, em::triangles(g));
        } else {
            throw em::ParseError("unknown feature '" + name +
                                 "' (have degree, in_degree, out_degree, pagerank, hubness, "
                                 "authority, triangles)");
        }
    }

    t.write_tsv(a.out, {"eaglemine-features/1", "config " + features_config(a).dump()});
    std::cout << "wrote " << a.out << ": " << t.rows() << " nodes, " << t.names.size()
              << " feature(s)\n";
    return kExitSuccess;
}

// -------------------------------------------------------------------- mine --

struct MineArgs {
    std::string features, x, y;
    std::string histogram, cellmap;
    std::string out_dir;
    double base = 10.0;
    int bins_per_decade = 10;
    double x_min = 0.0, y_min = 0.0;  // 0 = auto
    double level_step = 0.0;
    int workers = 0;  // 0 = env/1
    int fit_iters = 500;
    double fit_tol = 1e-6;
    int em_outer = 80;
    double em_tol = 1e-8;
    bool export_plot = false;
};

int cmd_mine(const MineArgs& a) {
    if (a.histogram.empty() && a.features.empty())
        throw em::ParseError("one of --features or --histogram is required");

    em::Histogram h;
    std::optional<em::CellMap> map;

    if (!a.histogram.empty()) {
        h = em::Histogram::read(a.histogram);
        if (!a.cellmap.empty()) map = em::CellMap::read_tsv(a.cellmap);
    } else {
        em::FeatureTable t = em::FeatureTable::read_tsv(a.features);
        em::AxisConfig xa{a.x, a.base, a.bins_per_decade, a.x_min > 0 ? a.x_min : 1.0,
                          a.x_min <= 0};
        em::AxisConfig ya{a.y, a.base, a.bins_per_decade, a.y_min > 0 ? a.y_min : 1.0,
                          a.y_min <= 0};
        auto built = em::build_histogram(t, xa, ya);
        h = std::move(built.first);
        map = std::move(built.second);
    }

    em::PipelineConfig cfg;
    cfg.x_axis = h.row_axis;
    cfg.y_axis = h.col_axis;
    cfg.level_step = a.level_step;
    cfg.single_fit = {a.fit_iters, a.fit_tol};
    cfg.mixture_fit.max_outer = a.em_outer;
    cfg.mixture_fit.ll_tol = a.em_tol;
    cfg.workers = a.workers > 0 ? a.workers : env_workers();

    em::MineResult res = em::mine_histogram(h, cfg);
    const em::Summary& s = res.summary;

    namespace fs = std::filesystem;
    fs::create_directories(a.out_dir);
    auto in_dir = [&](const char* name) { return (fs::path(a.out_dir) / name).string(); };

    spill(in_dir("summary.json"), s.to_json(2));
    h.write(in_dir("histogram.csv"));
    spill(in_dir("tree.json"), res.tree.to_json(s.config_echo));
    if (map) {
        map->write_tsv(in_dir("cellmap.tsv"), {"eaglemine-cellmap/1"});
        em::write_node_labels(s, *map, in_dir("node_labels.tsv"),
                              {"eaglemine-node-labels/1", "config " + s.config_echo});
    }
    if (a.export_plot) {
        em::write_heatmap_csv(h, in_dir("heatmap.csv"),
                              {"eaglemine-heatmap/1", "config " + s.config_echo});
        em::write_labels_csv(s, in_dir("labels.csv"),
                             {"eaglemine-labels/1", "config " + s.config_echo});
    }

    std::cout << "histogram " << h.rows << "x" << h.cols << ", total mass " << h.total_mass()
              << "\n";
    std::cout << "clusters: " << s.models.size() << " (main model " << s.main_model
              << (s.main_is_fallback ? ", largest-count fallback" : "") << ")\n";
    std::cout << "outlier cells: " << s.outlier_cells.size() << "\n";
    std::cout << "wrote " << in_dir("summary.json") << "\n";
    return kExitSuccess;
}

// --------------------------------------------------------------------- mdl --

struct MdlArgs {
    std::string summary, histogram, out;
    bool use_delta = false;
    bool json_only = false;
};

int cmd_mdl(const MdlArgs& a) {
    em::Summary s = em::Summary::from_json(slurp(a.summary));
    em::Histogram h = em::Histogram::read(a.histogram);
    if (s.rows != h.rows || s.cols != h.cols)
        throw em::StructuralError("summary grid " + std::to_string(s.rows) + "x" +
                                  std::to_string(s.cols) + " does not match histogram " +
                                  std::to_string(h.rows) + "x" + std::to_string(h.cols));
    em::MdlReport rep = em::summary_mdl(s, h, a.use_delta);

    json record = json::parse(rep.to_json(2));
    json cfg;
    cfg["command"] = "mdl";
    cfg["summary"] = a.summary;
    cfg["histogram"] = a.histogram;
    cfg["code"] = a.use_delta ? "delta" : "gamma";
    record["config"] = cfg;
    std::string text = record.dump(2);

    if (!a.json_only) {
        std::printf("components (k)     %10d\n", rep.k_total);
        std::printf("k bits             %12.1f\n", rep.k_bits);
        std::printf("parameter bits     %12.1f\n", rep.param_bits);
        std::printf("count bits         %12.1f\n", rep.n_bits);
        std::printf("model bits         %12.1f\n", rep.model_bits);
        std::printf("error bits         %12.1f  (%lld cells)\n", rep.error_bits,
                    static_cast<long long>(rep.error_cells));
        std::printf("total bits         %12.1f\n", rep.total_bits);
    }
    std::cout << text << "\n";
    if (!a.out.empty()) spill(a.out, text);
    return kExitSuccess;
}

// -------------------------------------------------------------------- tree --

struct TreeArgs {
    std::string histogram, out;
    std::string stage = "expanded";
    double level_step = 0.0;
    bool print_levels = false;
};

int cmd_tree(const TreeArgs& a) {
    em::Histogram h = em::Histogram::read(a.histogram);
    em::WaterLevelTree t = em::build_tree(h, a.level_step);
    if (a.stage != "raw") em::contract(t);
    if (a.stage == "pruned" || a.stage == "expanded") em::prune(t);
    if (a.stage == "expanded") em::expand(t, h);

    json cfg;
    cfg["command"] = "tree";
    cfg["histogram"] = a.histogram;
    cfg["stage"] = a.stage;
    cfg["level_step"] = a.level_step;

    if (a.print_levels) {
        std::vector<std::int64_t> count(t.levels.size(), 0);
        for (int id : t.alive_ids()) {
            const em::Island& n = t.node(id);
            if (n.is_root || n.level_index < 0) continue;
            if (std::size_t(n.level_index) < count.size()) ++count[std::size_t(n.level_index)];
        }
        std::cout << "# level\tislands\n";
        char buf[40];
        for (std::size_t k = 0; k < t.levels.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", t.levels[k]);
            std::cout << buf << '\t' << count[k] << '\n';
        }
    } else {
        std::cout << "levels: " << t.levels.size() << ", islands alive: " << t.alive_ids().size()
                  << ", depth: " << t.depth() << "\n";
    }
    if (!a.out.empty()) spill(a.out, t.to_json(cfg.dump()));
    return kExitSuccess;
}

// ------------------------------------------------------------------- score --

struct ScoreArgs {
    std::string summary, cellmap, features, out;
    std::string rank_by = "auto";
    int top = 10;
};

int cmd_score(const ScoreArgs& a) {
    em::Summary s = em::Summary::from_json(slurp(a.summary));
    em::CellMap map = em::CellMap::read_tsv(a.cellmap);
    std::optional<em::FeatureTable> feats;
    if (!a.features.empty()) feats = em::FeatureTable::read_tsv(a.features);

    std::string rank_by = a.rank_by;
    if (rank_by == "none") rank_by.clear();
    if (rank_by == "auto") {
        rank_by.clear();
        if (feats) {
            if (feats->find("hubness")) rank_by = "hubness";
            else if (feats->find("authority")) rank_by = "authority";
        }
    }

    auto ranked = em::rank_nodes(s, map, feats ? &*feats : nullptr, rank_by);

    json cfg;
    cfg["command"] = "score";
    cfg["summary"] = a.summary;
    cfg["cellmap"] = a.cellmap;
    cfg["features"] = a.features;
    cfg["rank_by"] = rank_by.empty() ? "none" : rank_by;
    cfg["top"] = a.top;

    std::size_t limit = a.top <= 0 ? ranked.size() : std::min<std::size_t>(ranked.size(), a.top);
    std::cout << "rank\tnode_id\tcluster\tscore\n";
    char buf[40];
    for (std::size_t i = 0; i < limit; ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", ranked[i].score);
        std::cout << (i + 1) << '\t' << ranked[i].id << '\t' << ranked[i].cluster << '\t' << buf
                  << '\n';
    }
    if (!a.out.empty())
        em::write_node_scores(ranked, a.out, {"eaglemine-scores/1", "config " + cfg.dump()});
    return kExitSuccess;
}

int run_guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const em::DegenerateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const em::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const em::StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPipeline;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph micro-cluster mining on log-log feature histograms"};
    app.require_subcommand(1);

    FeaturesArgs fa;
    CLI::App* feat = app.add_subcommand("features", "compute per-node features from an edge list");
    feat->add_option("--in", fa.in, "edge list: src dst [weight], '#'/'%' comments")->required();
    feat->add_option("--out", fa.out, "output feature TSV")->required();
    feat->add_option("--mode", fa.mode, "graph mode")
        ->check(CLI::IsMember({"homogeneous", "bipartite"}))
        ->capture_default_str();
    feat->add_option("--bipartite-ids", fa.ids, "bipartite id namespaces")
        ->check(CLI::IsMember({"shared", "split"}))
        ->capture_default_str();
    feat->add_option("--side", fa.side, "which node side the rows describe")
        ->check(CLI::IsMember({"src", "dst"}))
        ->capture_default_str();
    feat->add_option("--compute", fa.compute,
                     "comma-separated features: degree,in_degree,out_degree,pagerank,hubness,"
                     "authority,triangles")
        ->delimiter(',')
        ->capture_default_str();
    feat->add_option("--damping", fa.damping, "pagerank damping factor")->capture_default_str();
    feat->add_option("--pr-tol", fa.pr_tol, "pagerank convergence tolerance")
        ->capture_default_str();
    feat->add_option("--pr-iters", fa.pr_iters, "pagerank iteration cap")->capture_default_str();
    feat->add_option("--hits-tol", fa.hits_tol, "hub/authority convergence tolerance")
        ->capture_default_str();
    feat->add_option("--hits-iters", fa.hits_iters, "hub/authority iteration cap")
        ->capture_default_str();

    MineArgs ma;
    CLI::App* mine = app.add_subcommand("mine", "find clusters and outliers in a feature plane");
    auto* opt_feat = mine->add_option("--features", ma.features, "feature TSV input");
    auto* opt_hist = mine->add_option("--histogram", ma.histogram, "prebuilt histogram input");
    opt_feat->excludes(opt_hist);
    opt_hist->excludes(opt_feat);
    auto* opt_x = mine->add_option("--x", ma.x, "feature for the row axis")->needs(opt_feat);
    auto* opt_y = mine->add_option("--y", ma.y, "feature for the column axis")->needs(opt_feat);
    opt_feat->needs(opt_x)->needs(opt_y);
    mine->add_option("--cellmap", ma.cellmap, "node-to-cell map matching --histogram")
        ->needs(opt_hist);
    mine->add_option("--out-dir", ma.out_dir, "directory for all outputs")->required();
    mine->add_option("--base", ma.base, "log-bin base")->capture_default_str();
    mine->add_option("--bins-per-decade", ma.bins_per_decade, "bins per factor-of-base")
        ->capture_default_str();
    mine->add_option("--x-min", ma.x_min, "first bin edge on x (default: smallest positive value)");
    mine->add_option("--y-min", ma.y_min, "first bin edge on y (default: smallest positive value)");
    mine->add_option("--level-step", ma.level_step,
                     "water-level increment in log height (0 = max/20)")
        ->capture_default_str();
    mine->add_option("--workers", ma.workers, "parallel island fits (default $EAGLEMINE_WORKERS)")
        ->check(CLI::Range(1, 4096));
    mine->add_option("--fit-iters", ma.fit_iters, "single-model optimizer iteration cap")
        ->capture_default_str();
    mine->add_option("--fit-tol", ma.fit_tol, "single-model gradient tolerance")
        ->capture_default_str();
    mine->add_option("--em-outer", ma.em_outer, "mixture outer-loop cap")->capture_default_str();
    mine->add_option("--em-tol", ma.em_tol, "mixture log-likelihood tolerance")
        ->capture_default_str();
    mine->add_flag("--export-plot", ma.export_plot, "also write heatmap.csv and labels.csv");

    MdlArgs da;
    CLI::App* mdl = app.add_subcommand("mdl", "description length of a summary vs its histogram");
    mdl->add_option("--summary", da.summary, "summary JSON from mine")->required();
    mdl->add_option("--histogram", da.histogram, "histogram the summary describes")->required();
    mdl->add_option("--out", da.out, "also write the JSON record here");
    mdl->add_flag("--delta", da.use_delta, "use the delta integer code instead of gamma");
    mdl->add_flag("--json", da.json_only, "print only the JSON record");

    TreeArgs ta;
    CLI::App* tree = app.add_subcommand("tree", "water-level island hierarchy of a histogram");
    tree->add_option("--histogram", ta.histogram, "histogram input")->required();
    tree->add_option("--level-step", ta.level_step,
                     "water-level increment in log height (0 = max/20)")
        ->capture_default_str();
    tree->add_option("--stage", ta.stage, "how far to refine the tree")
        ->check(CLI::IsMember({"raw", "contracted", "pruned", "expanded"}))
        ->capture_default_str();
    tree->add_flag("--levels", ta.print_levels, "print one line per level: level value, islands");
    tree->add_option("--out", ta.out, "write the tree JSON here");

    ScoreArgs sa;
    CLI::App* score = app.add_subcommand("score", "rank nodes by cluster suspiciousness");
    score->add_option("--summary", sa.summary, "summary JSON from mine")->required();
    score->add_option("--cellmap", sa.cellmap, "node-to-cell map from mine")->required();
    score->add_option("--features", sa.features, "feature TSV for tie-breaking");
    score->add_option("--rank-by", sa.rank_by,
                      "tie-break feature: auto, none, or a feature column name")
        ->capture_default_str();
    score->add_option("--top", sa.top, "rows to print (0 = all)")->capture_default_str();
    score->add_option("--out", sa.out, "write the full ranking TSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitUsage;
    }

    if (feat->parsed()) return run_guarded([&] { return cmd_features(fa); });
    if (mine->parsed()) return run_guarded([&] { return cmd_mine(ma); });
    if (mdl->parsed()) return run_guarded([&] { return cmd_mdl(da); });
    if (tree->parsed()) return run_guarded([&] { return cmd_tree(ta); });
    if (score->parsed()) return run_guarded([&] { return cmd_score(sa); });
    return kExitUsage;
}
