#include "eaglemine/waterlevel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_set>

#include <json.hpp>

#include "eaglemine/errors.hpp"

namespace eaglemine {

std::int64_t Mask::count() const {
    std::int64_t n = 0;
    for (auto b : v) n += b;
    return n;
}

Mask flood(const Histogram& h, double level) {
    Mask m(h.rows, h.cols);
    for (int r = 0; r < h.rows; ++r)
        for (int c = 0; c < h.cols; ++c) {
            std::int64_t v = h.at(r, c);
            if (v > 0 && std::log(double(v)) >= level) m.set(r, c, true);
        }
    return m;
}

Mask binary_open(const Mask& m, const Mask& element) {
    std::vector<Cell> offsets;
    for (int r = 0; r < element.rows; ++r)
        for (int c = 0; c < element.cols; ++c)
            if (element.at(r, c)) offsets.push_back(Cell{r, c});
    if (offsets.empty()) throw StructuralError("binary_open: empty structuring element");

    Mask eroded(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) {
            bool all = true;
            for (const Cell& o : offsets) {
                int rr = r + o.r, cc = c + o.c;
                if (!m.in_bounds(rr, cc) || !m.at(rr, cc)) {
                    all = false;
                    break;
                }
            }
            eroded.set(r, c, all);
        }
    Mask opened(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (eroded.at(r, c))
                for (const Cell& o : offsets) opened.set(r + o.r, c + o.c, true);
    return opened;
}

Mask open_square2(const Mask& m) {
    Mask el(2, 2);
    el.v.assign(4, 1);
    return binary_open(m, el);
}

std::vector<std::vector<Cell>> connected_components(const Mask& m) {
    std::vector<std::vector<Cell>> comps;
    std::vector<std::uint8_t> seen(m.v.size(), 0);
    std::vector<Cell> stack;
    for (int r0 = 0; r0 < m.rows; ++r0)
        for (int c0 = 0; c0 < m.cols; ++c0) {
            std::size_t idx0 = std::size_t(r0) * m.cols + c0;
            if (!m.v[idx0] || seen[idx0]) continue;
            std::vector<Cell> comp;
            stack.assign(1, Cell{r0, c0});
            seen[idx0] = 1;
            while (!stack.empty()) {
                Cell cur = stack.back();
                stack.pop_back();
                comp.push_back(cur);
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        int rr = cur.r + dr, cc = cur.c + dc;
                        if (!m.in_bounds(rr, cc)) continue;
                        std::size_t idx = std::size_t(rr) * m.cols + cc;
                        if (m.v[idx] && !seen[idx]) {
                            seen[idx] = 1;
                            stack.push_back(Cell{rr, cc});
                        }
                    }
            }
            std::sort(comp.begin(), comp.end());
            comps.push_back(std::move(comp));
        }
    return comps;
}

std::vector<int> WaterLevelTree::alive_ids() const {
    std::vector<int> ids;
    for (const Island& n : nodes)
        if (n.alive) ids.push_back(n.id);
    return ids;
}

int WaterLevelTree::depth() const {
    if (root < 0) return 0;
    int best = 0;
    std::deque<std::pair<int, int>> q{{root, 0}};
    while (!q.empty()) {
        auto [id, d] = q.front();
        q.pop_front();
        best = std::max(best, d);
        for (int c : node(id).children)
            if (node(c).alive) q.emplace_back(c, d + 1);
    }
    return best;
}

namespace {

std::int64_t cells_mass(const std::vector<Cell>& cells, const Histogram& h) {
    std::int64_t m = 0;
    for (const Cell& c : cells) m += h.at(c.r, c.c);
    return m;
}

}  // namespace

WaterLevelTree build_tree(const Histogram& h, double level_step) {
    WaterLevelTree t;
    std::int64_t hmax = h.max_height();

    double top = hmax > 1 ? std::log(double(hmax)) : 0.0;
    double step = level_step;
    if (step <= 0.0) step = top > 0.0 ? top / 20.0 : 1.0;
    if (top / step > 5000.0) throw StructuralError("level step too small for this histogram");
    for (int k = 0;; ++k) {
        double r = double(k) * step;
        if (r > top + 1e-12) break;
        t.levels.push_back(r);
        if (top == 0.0) break;
    }

    Island root;
    root.id = 0;
    root.level_index = -1;
    root.level = 0.0;
    root.is_root = true;
    for (int r = 0; r < h.rows; ++r)
        for (int c = 0; c < h.cols; ++c)
            if (h.at(r, c) > 0) root.cells.push_back(Cell{r, c});
    root.area = std::int64_t(root.cells.size());
    root.mass = cells_mass(root.cells, h);
    t.nodes.push_back(std::move(root));
    t.root = 0;

    // owner[i] = node id of the opened component covering cell i one level down
    std::vector<int> owner(std::size_t(h.rows) * h.cols, t.root);
    Mask prev_opened;
    for (std::size_t k = 0; k < t.levels.size(); ++k) {
        Mask opened = open_square2(flood(h, t.levels[k]));
        if (opened.count() == 0) break;          // higher levels are empty too
        if (k > 0 && opened == prev_opened) continue;  // nothing new at this level

        std::vector<int> next_owner(owner.size(), -1);
        for (const auto& comp : connected_components(opened)) {
            Island isl;
            isl.id = int(t.nodes.size());
            isl.level_index = int(k);
            isl.level = t.levels[k];
            isl.cells = comp;
            isl.area = std::int64_t(comp.size());
            isl.mass = cells_mass(comp, h);
            const Cell& c0 = comp.front();
            isl.parent = owner[std::size_t(c0.r) * h.cols + c0.c];
            if (isl.parent < 0) isl.parent = t.root;  // cannot happen if opening is monotone
            t.nodes[std::size_t(isl.parent)].children.push_back(isl.id);
            for (const Cell& c : comp) next_owner[std::size_t(c.r) * h.cols + c.c] = isl.id;
            t.nodes.push_back(std::move(isl));
        }
        owner = std::move(next_owner);
        prev_opened = std::move(opened);
    }
    return t;
}

void contract(WaterLevelTree& t) {
    if (t.root < 0) return;
    // (chain base, kept parent) pairs; the survivor of each single-child chain
    // inherits the base's cells so it keeps its extent from just after the split.
    std::vector<std::pair<int, int>> stack;
    for (int c : t.node(t.root).children)
        if (t.node(c).alive) stack.emplace_back(c, t.root);
    t.node(t.root).children.clear();

    while (!stack.empty()) {
        auto [base, kept_parent] = stack.back();
        stack.pop_back();
        int cur = base;
        while (t.node(cur).children.size() == 1) {
            int only = t.node(cur).children.front();
            t.node(cur).alive = false;
            cur = only;
        }
        Island& surv = t.node(cur);
        if (cur != base) {
            Island& b = t.node(base);
            surv.cells = std::move(b.cells);
            surv.area = b.area;
            surv.mass = b.mass;
            surv.level = b.level;
            surv.level_index = b.level_index;
        }
        surv.parent = kept_parent;
        t.node(kept_parent).children.push_back(cur);
        auto kids = std::move(surv.children);
        surv.children.clear();
        for (int k : kids)
            if (t.node(k).alive) stack.emplace_back(k, cur);
    }
    // stack order scrambles sibling order; ids carry the birth order
    for (Island& n : t.nodes)
        if (n.alive) std::sort(n.children.begin(), n.children.end());
}

void prune(WaterLevelTree& t) {
    if (t.root < 0) return;
    auto kill_subtree = [&](int id) {
        std::vector<int> st{id};
        while (!st.empty()) {
            int n = st.back();
            st.pop_back();
            t.node(n).alive = false;
            for (int c : t.node(n).children) st.push_back(c);
        }
    };
    std::deque<int> q{t.root};
    while (!q.empty()) {
        int id = q.front();
        q.pop_front();
        Island& n = t.node(id);
        if (n.children.empty()) continue;
        // The root is a synthetic container over the base-level islands; its
        // raw cell count includes scatter the smoothing removed, so comparing
        // its children against it would wipe real structure.
        if (n.is_root) {
            for (int c : n.children) q.push_back(c);
            continue;
        }
        std::int64_t tot = 0;
        for (int c : n.children) tot += t.node(c).area;
        if (2 * tot < n.area) {
            for (int c : n.children) kill_subtree(c);
            n.children.clear();
        } else {
            for (int c : n.children) q.push_back(c);
        }
    }
}

void expand(WaterLevelTree& t, const Histogram& h) {
    if (t.root < 0) return;
    std::size_t ncell = std::size_t(h.rows) * h.cols;
    // Deepest alive island covering each cell. Ids ascend from ancestors to
    // descendants, so painting in id order leaves the deepest owner on top.
    std::vector<int> owner(ncell, -1);
    for (const Island& n : t.nodes) {
        if (!n.alive) continue;
        for (const Cell& c : n.cells) owner[std::size_t(c.r) * h.cols + c.c] = n.id;
    }
    std::vector<int> ring_claim(ncell, -1);
    std::vector<std::uint8_t> in_region(ncell, 0);

    for (Island& isl : t.nodes) {
        if (!isl.alive || isl.is_root) continue;
        std::unordered_set<int> anc;
        for (int p = isl.parent; p >= 0; p = t.node(p).parent) anc.insert(p);

        for (const Cell& c : isl.cells) in_region[std::size_t(c.r) * h.cols + c.c] = 1;
        std::int64_t total = isl.area;
        const std::int64_t cap = 2 * isl.area;
        std::vector<Cell> ring;
        std::vector<Cell> boundary = isl.cells;  // cells whose neighbors to scan

        while (total < cap && !boundary.empty()) {
            std::vector<Cell> frontier;
            for (const Cell& c : boundary)
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        int rr = c.r + dr, cc = c.c + dc;
                        if (rr < 0 || rr >= h.rows || cc < 0 || cc >= h.cols) continue;
                        std::size_t idx = std::size_t(rr) * h.cols + cc;
                        if (h.heights[idx] <= 0 || in_region[idx]) continue;
                        int o = owner[idx];
                        if (o != -1 && o != isl.id && !anc.count(o)) continue;
                        if (ring_claim[idx] != -1 && ring_claim[idx] != isl.id) continue;
                        frontier.push_back(Cell{rr, cc});
                    }
            std::sort(frontier.begin(), frontier.end());
            frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
            boundary.clear();
            for (const Cell& c : frontier) {
                if (total >= cap) break;
                std::size_t idx = std::size_t(c.r) * h.cols + c.c;
                in_region[idx] = 1;
                ring_claim[idx] = isl.id;
                ring.push_back(c);
                boundary.push_back(c);
                ++total;
            }
        }
        for (const Cell& c : isl.cells) in_region[std::size_t(c.r) * h.cols + c.c] = 0;
        for (const Cell& c : ring) in_region[std::size_t(c.r) * h.cols + c.c] = 0;
        std::sort(ring.begin(), ring.end());
        isl.ring = std::move(ring);
    }
}

namespace {

nlohmann::json rle_rows(const std::vector<Cell>& cells) {
    nlohmann::json runs = nlohmann::json::array();
    std::size_t i = 0;
    while (i < cells.size()) {
        std::size_t j = i + 1;
        while (j < cells.size() && cells[j].r == cells[i].r && cells[j].c == cells[j - 1].c + 1) ++j;
        runs.push_back({cells[i].r, cells[i].c, int(j - i)});
        i = j;
    }
    return runs;
}

}  // namespace

std::string WaterLevelTree::to_json(const std::string& config_echo) const {
    nlohmann::json j;
    j["schema"] = "eaglemine-tree/1";
    if (!config_echo.empty()) j["config"] = nlohmann::json::parse(config_echo);
    j["levels"] = levels;
    j["root"] = root;
    nlohmann::json islands = nlohmann::json::array();
    for (const Island& n : nodes) {
        if (!n.alive) continue;
        nlohmann::json e;
        e["id"] = n.id;
        e["level_index"] = n.level_index;
        e["level"] = n.level;
        e["area"] = n.area;
        e["mass"] = n.mass;
        e["parent"] = n.parent;
        e["root"] = n.is_root;
        e["cells"] = rle_rows(n.cells);
        if (!n.ring.empty()) e["ring"] = rle_rows(n.ring);
        islands.push_back(std::move(e));
    }
    j["islands"] = std::move(islands);
    return j.dump(2);
}

}  // namespace eaglemine
