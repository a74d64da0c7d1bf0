#include "eaglemine/eaglemine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>

#include <json.hpp>

#include "eaglemine/errors.hpp"

namespace eaglemine {

std::vector<ModelKind> assign_vocabulary_terms(const WaterLevelTree& t) {
    std::vector<ModelKind> terms(t.nodes.size(), ModelKind::single);
    if (t.root < 0) return terms;
    // The mixture stands for the dominant base region: it starts at the
    // largest-mass base-level island and each step passes to the child with
    // the largest mass (children nest inside parents, so a child's own mass is
    // its overlap with the current holder). The synthetic container root also
    // carries it, for the degenerate tree where nothing survived smoothing and
    // the root is fitted directly.
    terms[std::size_t(t.root)] = ModelKind::mixture2;
    int cur = t.root;
    while (true) {
        int best = -1;
        std::int64_t best_mass = -1;
        for (int c : t.node(cur).children) {
            const Island& ch = t.node(c);
            if (!ch.alive) continue;
            if (ch.mass > best_mass) {  // ids ascend, so ties keep the lower id
                best_mass = ch.mass;
                best = c;
            }
        }
        if (best < 0) break;
        terms[std::size_t(best)] = ModelKind::mixture2;
        cur = best;
    }
    return terms;
}

namespace {

/// Eigenvectors of the 2x2 symmetric matrix [[a,b],[b,c]], major axis first.
void sym_axes(double a, double b, double c, double e1[2], double e2[2]) {
    double half = 0.5 * (a + c);
    double disc = std::sqrt(std::max(0.25 * (a - c) * (a - c) + b * b, 0.0));
    double l1 = half + disc;
    double v0 = b, v1 = l1 - a;
    double w0 = l1 - c, w1 = b;
    if (v0 * v0 + v1 * v1 < w0 * w0 + w1 * w1) {
        v0 = w0;
        v1 = w1;
    }
    double n = std::hypot(v0, v1);
    if (n < 1e-30) {
        v0 = a >= c ? 1.0 : 0.0;
        v1 = 1.0 - v0;
        n = 1.0;
    }
    e1[0] = v0 / n;
    e1[1] = v1 / n;
    e2[0] = -e1[1];
    e2[1] = e1[0];
}

void test_group(const std::vector<Cell>& cells, ShapeTestResult& out) {
    if (cells.size() < std::size_t(kAdMinSamples)) {
        out.too_small = true;
        return;
    }
    double mr = 0.0, mc = 0.0;
    for (const Cell& c : cells) {
        mr += double(c.r) + 0.5;
        mc += double(c.c) + 0.5;
    }
    mr /= double(cells.size());
    mc /= double(cells.size());
    double a = 0.0, b = 0.0, d = 0.0;
    for (const Cell& c : cells) {
        double dr = double(c.r) + 0.5 - mr;
        double dc = double(c.c) + 0.5 - mc;
        a += dr * dr;
        b += dr * dc;
        d += dc * dc;
    }
    a /= double(cells.size());
    b /= double(cells.size());
    d /= double(cells.size());
    double e1[2], e2[2];
    sym_axes(a, b, d, e1, e2);
    for (const double* e : {e1, e2}) {
        std::vector<double> proj;
        proj.reserve(cells.size());
        for (const Cell& c : cells)
            proj.push_back((double(c.r) + 0.5) * e[0] + (double(c.c) + 0.5) * e[1]);
        AdResult ad = ad_statistic(std::move(proj));
        AxisShapeTest at;
        at.a2_star = ad.a2_star;
        at.rejected = ad.rejected;
        at.too_small = ad.too_small;
        at.degenerate = ad.degenerate;
        out.axes.push_back(at);
        if (at.rejected) out.rejected = true;
    }
}

}  // namespace

ShapeTestResult island_shape_test(const std::vector<Cell>& cells, ModelKind kind,
                                  const DtmParams* comps) {
    ShapeTestResult res;
    if (kind == ModelKind::single) {
        test_group(cells, res);
        return res;
    }
    if (!comps) throw StructuralError("mixture shape test needs fitted components");
    std::vector<double> p0 = cell_probabilities(comps[0], cells);
    std::vector<double> p1 = cell_probabilities(comps[1], cells);
    std::vector<Cell> g0, g1;
    for (std::size_t i = 0; i < cells.size(); ++i)
        (p1[i] > p0[i] ? g1 : g0).push_back(cells[i]);
    test_group(g0, res);
    test_group(g1, res);
    return res;
}

namespace {

void run_indexed(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    int k = std::min(workers, n);
    std::vector<std::future<void>> futs;
    futs.reserve(std::size_t(k));
    for (int w = 0; w < k; ++w)
        futs.push_back(std::async(std::launch::async, [&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        }));
    for (auto& f : futs) f.get();
}

struct Decision {
    bool fit_ok = false;
    DtmModel model;
    IslandSample sample;
    ShapeTestResult shape;
};

Decision judge_island(const WaterLevelTree& t, const Histogram& h, int id, ModelKind term,
                      const SearchOptions& opt) {
    Decision d;
    d.sample = island_sample(t.node(id), h);
    try {
        d.model.kind = term;
        d.model.island_id = id;
        d.model.n = estimate_n(d.sample);
        if (term == ModelKind::mixture2) {
            MixtureFit mf = fit_mixture(d.sample, opt.mixture_fit);
            d.model.comp[0] = mf.comp[0];
            d.model.comp[1] = mf.comp[1];
            d.model.converged = mf.converged;
            d.model.collapsed = mf.collapsed;
        } else {
            FitResult fr = fit_single(d.sample, opt.single_fit);
            d.model.comp[0] = fr.params;
            d.model.converged = fr.converged;
        }
        d.shape = island_shape_test(d.sample.cells, d.model.kind, d.model.comp);
        d.fit_ok = true;
    } catch (const DegenerateError&) {
        d.fit_ok = false;
    }
    return d;
}

}  // namespace

SearchResult search(const WaterLevelTree& t, const Histogram& h, const SearchOptions& opt) {
    SearchResult sr;
    if (t.root < 0 || !t.node(t.root).alive) return sr;
    std::vector<ModelKind> terms = assign_vocabulary_terms(t);

    // The synthetic container root is not itself an island; descend to the
    // base-level islands, unless smoothing erased them all, in which case the
    // root's raw cells are the only region left to model.
    std::vector<int> wave;
    if (t.node(t.root).is_root) {
        for (int c : t.node(t.root).children)
            if (t.node(c).alive) wave.push_back(c);
    }
    if (wave.empty()) wave.push_back(t.root);
    while (!wave.empty()) {
        std::vector<Decision> decisions(wave.size());
        run_indexed(int(wave.size()), opt.workers, [&](int i) {
            decisions[std::size_t(i)] =
                judge_island(t, h, wave[std::size_t(i)], terms[std::size_t(wave[std::size_t(i)])], opt);
        });

        std::vector<int> next;
        for (std::size_t i = 0; i < wave.size(); ++i) {
            int id = wave[i];
            Decision& d = decisions[i];
            std::vector<int> kids;
            for (int c : t.node(id).children)
                if (t.node(c).alive) kids.push_back(c);

            if (!d.fit_ok) {
                sr.skipped_islands.push_back(id);
                next.insert(next.end(), kids.begin(), kids.end());
            } else if (!d.shape.rejected) {
                sr.clusters.push_back({std::move(d.model), std::move(d.sample), std::move(d.shape)});
            } else if (!kids.empty()) {
                next.insert(next.end(), kids.begin(), kids.end());
            } else {
                d.model.forced = true;
                sr.clusters.push_back({std::move(d.model), std::move(d.sample), std::move(d.shape)});
            }
        }
        wave = std::move(next);
    }
    return sr;
}

namespace {

struct Bbox {
    int r0 = 0, r1 = -1, c0 = 0, c1 = -1;
};

Bbox bbox_of(const std::vector<Cell>& cells) {
    Bbox b;
    for (const Cell& c : cells) {
        if (b.r1 < b.r0) {
            b.r0 = b.r1 = c.r;
            b.c0 = b.c1 = c.c;
        } else {
            b.r0 = std::min(b.r0, c.r);
            b.r1 = std::max(b.r1, c.r);
            b.c0 = std::min(b.c0, c.c);
            b.c1 = std::max(b.c1, c.c);
        }
    }
    return b;
}

/// Proximity gate: bounding boxes grown by one cell overlap.
bool boxes_near(const Bbox& a, const Bbox& b) {
    if (a.r1 < a.r0 || b.r1 < b.r0) return false;
    return a.r0 - 1 <= b.r1 + 1 && b.r0 - 1 <= a.r1 + 1 && a.c0 - 1 <= b.c1 + 1 &&
           b.c0 - 1 <= a.c1 + 1;
}

}  // namespace

void stitch(SearchResult& sr, const Histogram& h, const FitOptions& opt) {
    while (true) {
        std::vector<std::size_t> singles;
        for (std::size_t i = 0; i < sr.clusters.size(); ++i)
            if (sr.clusters[i].model.kind == ModelKind::single) singles.push_back(i);
        if (singles.size() < 2) return;

        std::vector<Bbox> boxes(singles.size());
        for (std::size_t k = 0; k < singles.size(); ++k)
            boxes[k] = bbox_of(sr.clusters[singles[k]].sample.cells);

        double best_delta = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0, best_j = 0;
        DtmModel best_model;
        IslandSample best_sample;
        ShapeTestResult best_shape;
        bool found = false;

        for (std::size_t ai = 0; ai + 1 < singles.size(); ++ai)
            for (std::size_t bj = ai + 1; bj < singles.size(); ++bj) {
                FittedCluster& ca = sr.clusters[singles[ai]];
                FittedCluster& cb = sr.clusters[singles[bj]];
                if (!boxes_near(boxes[ai], boxes[bj])) continue;

                IslandSample merged;
                merged.cells = ca.sample.cells;
                merged.cells.insert(merged.cells.end(), cb.sample.cells.begin(),
                                    cb.sample.cells.end());
                std::sort(merged.cells.begin(), merged.cells.end());
                merged.cells.erase(std::unique(merged.cells.begin(), merged.cells.end()),
                                   merged.cells.end());
                for (const Cell& c : merged.cells) merged.weights.push_back(double(h.at(c.r, c.c)));

                ShapeTestResult shape = island_shape_test(merged.cells, ModelKind::single, nullptr);
                if (shape.rejected) continue;
                DtmModel mm;
                try {
                    FitResult fr = fit_single(merged, opt);
                    mm.kind = ModelKind::single;
                    mm.comp[0] = fr.params;
                    mm.converged = fr.converged;
                } catch (const DegenerateError&) {
                    continue;
                }
                mm.n = estimate_n(merged);
                mm.island_id = std::min(ca.model.island_id, cb.model.island_id);

                double la = log_likelihood(ca.model, ca.sample);
                double lb = log_likelihood(cb.model, cb.sample);
                double lm = log_likelihood(mm, merged);
                double pts = double(ca.model.n + cb.model.n);
                double delta = (la + lb - lm) / std::max(pts, 1.0);
                if (delta < best_delta) {
                    best_delta = delta;
                    best_i = singles[ai];
                    best_j = singles[bj];
                    best_model = mm;
                    best_sample = std::move(merged);
                    best_shape = shape;
                    found = true;
                }
            }
        if (!found) return;
        sr.clusters[best_i].model = std::move(best_model);
        sr.clusters[best_i].sample = std::move(best_sample);
        sr.clusters[best_i].shape = std::move(best_shape);
        sr.clusters.erase(sr.clusters.begin() + std::ptrdiff_t(best_j));
    }
}

namespace {

/// Cells within `mult` standard deviations of every component, clipped to the
/// positive quadrant. Holds essentially all of the model's mass, which keeps
/// the divergence sums nonnegative without walking an unbounded grid.
std::vector<Cell> coverage_box(const DtmModel& m, double mult) {
    std::int64_t r0 = std::numeric_limits<std::int64_t>::max(), r1 = -1;
    std::int64_t c0 = r0, c1 = -1;
    int ncomp = m.kind == ModelKind::mixture2 ? 2 : 1;
    for (int k = 0; k < ncomp; ++k) {
        const DtmParams& p = m.comp[k];
        double sr = std::sqrt(std::max(p.s_rr, 1e-12));
        double sc = std::sqrt(std::max(p.s_cc, 1e-12));
        r0 = std::min(r0, std::int64_t(std::floor(p.mu_r - mult * sr)));
        r1 = std::max(r1, std::int64_t(std::ceil(p.mu_r + mult * sr)));
        c0 = std::min(c0, std::int64_t(std::floor(p.mu_c - mult * sc)));
        c1 = std::max(c1, std::int64_t(std::ceil(p.mu_c + mult * sc)));
    }
    r0 = std::max<std::int64_t>(r0, 0);
    c0 = std::max<std::int64_t>(c0, 0);
    std::vector<Cell> cells;
    if (r1 < r0 || c1 < c0) return cells;
    if ((r1 - r0 + 1) * (c1 - c0 + 1) > 4'000'000) return cells;  // caller shrinks mult
    cells.reserve(std::size_t((r1 - r0 + 1) * (c1 - c0 + 1)));
    for (std::int64_t r = r0; r <= r1; ++r)
        for (std::int64_t c = c0; c <= c1; ++c) cells.push_back(Cell{int(r), int(c)});
    return cells;
}

}  // namespace

Summary summarize(const SearchResult& sr, const Histogram& h, const std::string& config_echo) {
    Summary s;
    s.rows = h.rows;
    s.cols = h.cols;
    s.config_echo = config_echo;
    for (const FittedCluster& c : sr.clusters) s.models.push_back(c.model);

    for (std::size_t i = 0; i < s.models.size(); ++i)
        if (s.models[i].kind == ModelKind::mixture2 && s.main_model < 0) s.main_model = int(i);
    if (s.main_model < 0 && !s.models.empty()) {
        std::int64_t best_n = -1;
        for (std::size_t i = 0; i < s.models.size(); ++i)
            if (s.models[i].n > best_n) {
                best_n = s.models[i].n;
                s.main_model = int(i);
            }
        s.main_is_fallback = true;
    }

    // Cell labels: argmax of the expected count n*P among models clearing the
    // probability gate; a cell every model finds implausible is an outlier.
    s.labels.assign(std::size_t(h.rows) * h.cols, kLabelEmpty);
    std::vector<Cell> occupied;
    for (int r = 0; r < h.rows; ++r)
        for (int c = 0; c < h.cols; ++c)
            if (h.at(r, c) > 0) occupied.push_back(Cell{r, c});
    std::vector<double> best(occupied.size(), -1.0);
    std::vector<std::int32_t> who(occupied.size(), kLabelOutlier);
    for (std::size_t mi = 0; mi < s.models.size(); ++mi) {
        std::vector<double> probs = model_cell_probabilities(s.models[mi], occupied);
        for (std::size_t k = 0; k < occupied.size(); ++k) {
            if (probs[k] < kOutlierProbability) continue;
            double expected = double(s.models[mi].n) * probs[k];
            if (expected > best[k]) {
                best[k] = expected;
                who[k] = std::int32_t(mi);
            }
        }
    }
    for (std::size_t k = 0; k < occupied.size(); ++k) {
        const Cell& c = occupied[k];
        if (who[k] == kLabelOutlier) s.outlier_cells.push_back(c);
        s.labels[std::size_t(c.r) * h.cols + c.c] = who[k];
    }

    // suspiciousness
    s.suspiciousness.assign(s.models.size(), 0.0);
    if (s.main_model >= 0) {
        const DtmModel& main = s.models[std::size_t(s.main_model)];
        for (std::size_t mi = 0; mi < s.models.size(); ++mi) {
            if (int(mi) == s.main_model) continue;
            std::vector<Cell> box;
            for (double mult : {8.5, 6.0, 4.0, 3.0, 2.0}) {
                box = coverage_box(s.models[mi], mult);
                if (!box.empty()) break;
            }
            double kl = 0.0;
            if (!box.empty()) {
                std::vector<double> pi = model_cell_probabilities(s.models[mi], box);
                std::vector<double> pm = model_cell_probabilities(main, box);
                for (std::size_t k = 0; k < box.size(); ++k) {
                    if (pi[k] <= 0.0) continue;
                    kl += pi[k] * (std::log(pi[k]) - std::log(std::max(pm[k], 1e-300)));
                }
            }
            s.suspiciousness[mi] = double(s.models[std::size_t(mi)].n) * kl;
        }
    }
    return s;
}

std::string Summary::to_json(int indent) const {
    nlohmann::json j;
    j["schema"] = "eaglemine-summary/1";
    j["config"] = config_echo.empty() ? nlohmann::json::object() : nlohmann::json::parse(config_echo);
    j["rows"] = rows;
    j["cols"] = cols;
    nlohmann::json ms = nlohmann::json::array();
    for (const DtmModel& m : models) ms.push_back(nlohmann::json::parse(m.to_json()));
    j["models"] = std::move(ms);
    j["main_model"] = main_model;
    j["main_is_fallback"] = main_is_fallback;
    j["suspiciousness"] = suspiciousness;
    nlohmann::json rle = nlohmann::json::array();
    std::size_t i = 0;
    while (i < labels.size()) {
        std::size_t jx = i;
        while (jx < labels.size() && labels[jx] == labels[i]) ++jx;
        rle.push_back({labels[i], jx - i});
        i = jx;
    }
    j["labels_rle"] = std::move(rle);
    nlohmann::json oc = nlohmann::json::array();
    for (const Cell& c : outlier_cells) oc.push_back({c.r, c.c});
    j["outlier_cells"] = std::move(oc);
    return j.dump(indent);
}

Summary Summary::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("schema", "") != std::string("eaglemine-summary/1"))
        throw ParseError("not an eaglemine summary document");
    Summary s;
    s.config_echo = j.at("config").dump();
    s.rows = j.at("rows").get<int>();
    s.cols = j.at("cols").get<int>();
    for (const auto& m : j.at("models")) s.models.push_back(DtmModel::from_json(m.dump()));
    s.main_model = j.at("main_model").get<int>();
    s.main_is_fallback = j.value("main_is_fallback", false);
    s.suspiciousness = j.at("suspiciousness").get<std::vector<double>>();
    for (const auto& run : j.at("labels_rle")) {
        std::int32_t val = run.at(0).get<std::int32_t>();
        std::size_t len = run.at(1).get<std::size_t>();
        s.labels.insert(s.labels.end(), len, val);
    }
    if (s.labels.size() != std::size_t(s.rows) * std::size_t(s.cols))
        throw ParseError("label run lengths do not cover the grid");
    for (const auto& c : j.at("outlier_cells"))
        s.outlier_cells.push_back(Cell{c.at(0).get<std::int32_t>(), c.at(1).get<std::int32_t>()});
    return s;
}

}  // namespace eaglemine
