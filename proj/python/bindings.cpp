// Python bindings for the eaglemine core: graph features, log-log histograms,
// the water-level mining pipeline, description length and the small numeric
// kernels (cell probabilities, normality statistic, integer codes).

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eaglemine/adtest.hpp"
#include "eaglemine/bvn.hpp"
#include "eaglemine/dtm.hpp"
#include "eaglemine/eaglemine.hpp"
#include "eaglemine/errors.hpp"
#include "eaglemine/features.hpp"
#include "eaglemine/graph.hpp"
#include "eaglemine/histogram.hpp"
#include "eaglemine/mdl.hpp"
#include "eaglemine/pipeline.hpp"
#include "eaglemine/waterlevel.hpp"

namespace py = pybind11;
namespace em = eaglemine;

namespace {

em::GraphMode parse_mode(const std::string& s) {
    if (s == "homogeneous") return em::GraphMode::homogeneous;
    if (s == "bipartite") return em::GraphMode::bipartite;
    throw std::invalid_argument("mode must be 'homogeneous' or 'bipartite'");
}

em::Direction parse_direction(const std::string& s) {
    if (s == "in") return em::Direction::in;
    if (s == "out") return em::Direction::out;
    if (s == "total") return em::Direction::total;
    throw std::invalid_argument("direction must be 'in', 'out' or 'total'");
}

em::Side parse_side(const std::string& s) {
    if (s == "src") return em::Side::src;
    if (s == "dst") return em::Side::dst;
    throw std::invalid_argument("side must be 'src' or 'dst'");
}

em::DtmParams make_params(double mu_r, double mu_c, double s_rr, double s_rc, double s_cc) {
    return em::DtmParams{mu_r, mu_c, s_rr, s_rc, s_cc};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "graph micro-cluster mining core";

    py::register_exception<em::ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<em::StructuralError>(m, "StructuralError", PyExc_ValueError);
    py::register_exception<em::DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);

    // ------------------------------------------------------------- graphs --
    py::class_<em::Graph>(m, "Graph")
        .def_property_readonly("n_src", &em::Graph::n_src)
        .def_property_readonly("n_dst", &em::Graph::n_dst)
        .def_property_readonly("n_edges", [](const em::Graph& g) { return g.edges().size(); })
        .def_property_readonly("src_names", &em::Graph::src_names)
        .def_property_readonly("dst_names", &em::Graph::dst_names)
        .def_property_readonly("mode", [](const em::Graph& g) {
            return g.mode() == em::GraphMode::bipartite ? "bipartite" : "homogeneous";
        });

    m.def(
        "load_edge_list",
        [](const std::string& path, const std::string& mode, const std::string& ids) {
            return em::load_edge_list(path, parse_mode(mode),
                                      ids == "split" ? em::BipartiteIds::split
                                                     : em::BipartiteIds::shared);
        },
        py::arg("path"), py::arg("mode") = "homogeneous", py::arg("ids") = "shared");

    m.def(
        "degrees",
        [](const em::Graph& g, const std::string& direction, const std::string& side) {
            return em::degrees(g, parse_direction(direction), parse_side(side));
        },
        py::arg("graph"), py::arg("direction") = "total", py::arg("side") = "src");

    m.def(
        "pagerank",
        [](const em::Graph& g, double damping, double tol, int max_iters) {
            em::PageRankResult r = em::pagerank(g, damping, tol, max_iters);
            return py::make_tuple(r.scores, r.iterations, r.converged);
        },
        py::arg("graph"), py::arg("damping") = 0.85, py::arg("tol") = 1e-10,
        py::arg("max_iters") = 200);

    m.def(
        "hubness_authority",
        [](const em::Graph& g, double tol, int max_iters) {
            em::HubAuthResult r = em::hubness_authority(g, tol, max_iters);
            py::dict d;
            d["hub"] = r.hub;
            d["auth"] = r.auth;
            d["iterations"] = r.iterations;
            d["converged"] = r.converged;
            return d;
        },
        py::arg("graph"), py::arg("tol") = 1e-12, py::arg("max_iters") = 500);

    m.def("triangles", &em::triangles, py::arg("graph"));

    // --------------------------------------------------------- histograms --
    m.def("log_bucketize", &em::log_bucketize, py::arg("value"), py::arg("base") = 10.0,
          py::arg("bins_per_decade") = 10, py::arg("vmin") = 1.0);

    py::class_<em::Histogram>(m, "Histogram")
        .def_readonly("rows", &em::Histogram::rows)
        .def_readonly("cols", &em::Histogram::cols)
        .def_readonly("heights", &em::Histogram::heights)
        .def("at", [](const em::Histogram& h, int r, int c) { return h.at(r, c); })
        .def("total_mass", &em::Histogram::total_mass)
        .def("max_height", &em::Histogram::max_height)
        .def("write", [](const em::Histogram& h, const std::string& p) { h.write(p); })
        .def_static("read", &em::Histogram::read);

    m.def(
        "build_histogram",
        [](const std::vector<std::string>& ids, const std::vector<double>& x,
           const std::vector<double>& y, double base, int bins_per_decade, double x_min,
           double y_min) {
            em::FeatureTable t;
            t.ids = ids;
            t.add("x", x);
            t.add("y", y);
            em::AxisConfig xa{"x", base, bins_per_decade, x_min > 0 ? x_min : 1.0, x_min <= 0};
            em::AxisConfig ya{"y", base, bins_per_decade, y_min > 0 ? y_min : 1.0, y_min <= 0};
            auto built = em::build_histogram(t, xa, ya);
            std::vector<std::pair<int, int>> cells;
            cells.reserve(built.second.cells.size());
            for (const em::Cell& c : built.second.cells) cells.emplace_back(c.r, c.c);
            return py::make_tuple(std::move(built.first), std::move(cells));
        },
        "Bin two feature vectors; returns (histogram, per-node (row, col) list).", py::arg("ids"),
        py::arg("x"), py::arg("y"), py::arg("base") = 10.0, py::arg("bins_per_decade") = 10,
        py::arg("x_min") = 0.0, py::arg("y_min") = 0.0);

    m.def(
        "histogram_from_heights",
        [](int rows, int cols, const std::vector<std::int64_t>& heights) {
            if (heights.size() != std::size_t(rows) * std::size_t(cols))
                throw std::invalid_argument("heights must have rows*cols entries");
            em::Histogram h;
            h.rows = rows;
            h.cols = cols;
            h.heights = heights;
            return h;
        },
        py::arg("rows"), py::arg("cols"), py::arg("heights"));

    // ------------------------------------------------------------- mining --
    m.def(
        "mine",
        [](const em::Histogram& h, double level_step, int workers) {
            em::PipelineConfig cfg;
            cfg.x_axis = h.row_axis;
            cfg.y_axis = h.col_axis;
            cfg.level_step = level_step;
            cfg.workers = workers;
            em::MineResult r = em::mine_histogram(h, cfg);
            py::dict d;
            d["summary"] = r.summary.to_json(2);
            d["tree"] = r.tree.to_json(r.summary.config_echo);
            d["labels"] = r.summary.labels;
            d["num_models"] = r.summary.models.size();
            d["main_model"] = r.summary.main_model;
            d["main_is_fallback"] = r.summary.main_is_fallback;
            d["suspiciousness"] = r.summary.suspiciousness;
            std::vector<std::pair<int, int>> outliers;
            for (const em::Cell& c : r.summary.outlier_cells) outliers.emplace_back(c.r, c.c);
            d["outlier_cells"] = std::move(outliers);
            return d;
        },
        "Run the full pipeline on a histogram; returns a result dict.", py::arg("histogram"),
        py::arg("level_step") = 0.0, py::arg("workers") = 1);

    m.def(
        "summary_mdl",
        [](const std::string& summary_json, const em::Histogram& h, bool use_delta) {
            em::Summary s = em::Summary::from_json(summary_json);
            em::MdlReport rep = em::summary_mdl(s, h, use_delta);
            py::dict d;
            d["k_total"] = rep.k_total;
            d["model_bits"] = rep.model_bits;
            d["error_bits"] = rep.error_bits;
            d["total_bits"] = rep.total_bits;
            d["error_cells"] = rep.error_cells;
            return d;
        },
        py::arg("summary_json"), py::arg("histogram"), py::arg("use_delta") = false);

    // --------------------------------------------------- numeric kernels --
    m.def(
        "cell_probability",
        [](double mu_r, double mu_c, double s_rr, double s_rc, double s_cc, int r, int c) {
            return em::cell_probability(make_params(mu_r, mu_c, s_rr, s_rc, s_cc),
                                        em::Cell{r, c});
        },
        py::arg("mu_r"), py::arg("mu_c"), py::arg("s_rr"), py::arg("s_rc"), py::arg("s_cc"),
        py::arg("r"), py::arg("c"));

    m.def("bvn_cdf", &em::bvn_cdf, py::arg("h"), py::arg("k"), py::arg("rho"));

    m.def(
        "fit_single",
        [](const std::vector<std::pair<int, int>>& cells, const std::vector<double>& weights) {
            em::IslandSample s;
            for (auto& rc : cells) s.cells.push_back(em::Cell{rc.first, rc.second});
            s.weights = weights;
            em::FitResult r = em::fit_single(s);
            py::dict d;
            d["mu"] = py::make_tuple(r.params.mu_r, r.params.mu_c);
            d["sigma"] = py::make_tuple(r.params.s_rr, r.params.s_rc, r.params.s_cc);
            d["converged"] = r.converged;
            d["iterations"] = r.iterations;
            d["mean_loglik"] = r.mean_loglik;
            return d;
        },
        "Fit one truncated grid Gaussian to weighted cells.", py::arg("cells"),
        py::arg("weights"));

    m.def(
        "ad_statistic",
        [](const std::vector<double>& sample) {
            em::AdResult r = em::ad_statistic(sample);
            py::dict d;
            d["a2"] = r.a2;
            d["a2_star"] = r.a2_star;
            d["rejected"] = r.rejected;
            d["too_small"] = r.too_small;
            d["degenerate"] = r.degenerate;
            return d;
        },
        "Composite normality test with estimated mean and variance.", py::arg("sample"));

    m.def("elias_gamma_length", [](std::uint64_t v) { return em::elias_gamma_length(v); },
          py::arg("value"));
    m.def(
        "elias_signed_length",
        [](std::int64_t v, bool use_delta) { return em::elias_signed_length(v, use_delta); },
        py::arg("value"), py::arg("use_delta") = false);

    m.attr("AD_CRITICAL_1PC") = em::kAdCritical1pc;
    m.attr("OUTLIER_PROBABILITY") = em::kOutlierProbability;
    m.attr("LABEL_OUTLIER") = em::kLabelOutlier;
    m.attr("LABEL_EMPTY") = em::kLabelEmpty;
}
