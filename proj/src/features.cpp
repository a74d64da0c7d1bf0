#include "eaglemine/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eaglemine/errors.hpp"

namespace eaglemine {

void FeatureTable::add(std::string name, std::vector<double> col) {
    if (!ids.empty() && col.size() != ids.size())
        throw StructuralError("feature column '" + name + "' has wrong length");
    names.push_back(std::move(name));
    columns.push_back(std::move(col));
}

const std::vector<double>* FeatureTable::find(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return &columns[k];
    return nullptr;
}

void FeatureTable::write_tsv(const std::string& path, const std::vector<std::string>& preamble) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write feature table: " + path);
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "node_id";
    for (const auto& n : names) out << '\t' << n;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        for (const auto& col : columns) {
            std::snprintf(buf, sizeof buf, "%.17g", col[i]);
            out << '\t' << buf;
        }
        out << '\n';
    }
}

FeatureTable FeatureTable::read_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open feature table: " + path);
    FeatureTable t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> toks;
        while (std::getline(ls, tok, '\t')) toks.push_back(tok);
        if (!have_header) {
            if (toks.size() < 2 || toks[0] != "node_id")
                throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'node_id<TAB>...' header");
            t.names.assign(toks.begin() + 1, toks.end());
            t.columns.resize(t.names.size());
            have_header = true;
            continue;
        }
        if (toks.size() != t.names.size() + 1)
            throw ParseError(path + ":" + std::to_string(lineno) + ": wrong column count");
        t.ids.push_back(toks[0]);
        for (std::size_t k = 0; k < t.names.size(); ++k) {
            char* end = nullptr;
            double v = std::strtod(toks[k + 1].c_str(), &end);
            if (end == toks[k + 1].c_str() || *end != '\0')
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + toks[k + 1] + "'");
            t.columns[k].push_back(v);
        }
    }
    if (!have_header) throw ParseError(path + ": empty feature table");
    return t;
}

std::vector<double> degrees(const Graph& g, Direction dir, Side side) {
    if (g.mode() == GraphMode::homogeneous) side = Side::src;
    std::size_t n = side == Side::src ? g.n_src() : g.n_dst();
    std::vector<double> in(n, 0.0), out(n, 0.0);
    for (const Edge& e : g.edges()) {
        if (g.mode() == GraphMode::homogeneous) {
            out[e.src] += e.weight;
            in[e.dst] += e.weight;
        } else if (side == Side::src) {
            out[e.src] += e.weight;
        } else {
            in[e.dst] += e.weight;
        }
    }
    std::vector<double> res(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        switch (dir) {
            case Direction::in: res[i] = in[i]; break;
            case Direction::out: res[i] = out[i]; break;
            case Direction::total: res[i] = in[i] + out[i]; break;
        }
    }
    return res;
}

PageRankResult pagerank(const Graph& g, double damping, double tol, int max_iters) {
    if (g.mode() != GraphMode::homogeneous)
        throw StructuralError("pagerank requires a homogeneous graph");
    std::size_t n = g.n_src();
    PageRankResult res;
    if (n == 0) {
        res.converged = true;
        return res;
    }
    std::vector<double> outstr(n, 0.0);
    for (const Edge& e : g.edges()) outstr[e.src] += e.weight;

    std::vector<double> x(n, 1.0 / double(n)), next(n);
    for (int it = 1; it <= max_iters; ++it) {
        double dangling = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (outstr[i] == 0.0) dangling += x[i];
        double base = (1.0 - damping) / double(n) + damping * dangling / double(n);
        std::fill(next.begin(), next.end(), base);
        for (const Edge& e : g.edges())
            if (outstr[e.src] > 0.0) next[e.dst] += damping * x[e.src] * e.weight / outstr[e.src];
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) diff += std::fabs(next[i] - x[i]);
        x.swap(next);
        res.iterations = it;
        if (diff <= tol) {
            res.converged = true;
            break;
        }
    }
    res.scores = std::move(x);
    return res;
}

HubAuthResult hubness_authority(const Graph& g, double tol, int max_iters) {
    std::size_t ns = g.n_src(), nd = g.n_dst();
    HubAuthResult res;
    res.hub.assign(ns, 0.0);
    res.auth.assign(nd, 0.0);
    bool any = false;
    for (const Edge& e : g.edges())
        if (e.weight > 0.0) any = true;
    if (!any || ns == 0 || nd == 0) {
        res.zero_matrix = true;
        res.converged = true;
        return res;
    }

    auto normalize = [](std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        if (s > 0.0)
            for (double& x : v) x /= s;
        return s;
    };
    auto fix_sign = [](std::vector<double>& v) {
        double best = 0.0;
        for (double x : v)
            if (std::fabs(x) > std::fabs(best)) best = x;
        if (best < 0.0)
            for (double& x : v) x = -x;
    };

    std::vector<double> hub(ns, 1.0 / std::sqrt(double(ns))), auth(nd, 0.0);
    std::vector<double> prev_hub, prev_auth;
    for (int it = 1; it <= max_iters; ++it) {
        prev_hub = hub;
        prev_auth = auth;
        std::fill(auth.begin(), auth.end(), 0.0);
        for (const Edge& e : g.edges()) auth[e.dst] += e.weight * hub[e.src];
        normalize(auth);
        std::fill(hub.begin(), hub.end(), 0.0);
        for (const Edge& e : g.edges()) hub[e.src] += e.weight * auth[e.dst];
        normalize(hub);
        res.iterations = it;
        double diff = 0.0;
        for (std::size_t i = 0; i < ns; ++i) diff = std::max(diff, std::fabs(hub[i] - prev_hub[i]));
        for (std::size_t j = 0; j < nd; ++j) diff = std::max(diff, std::fabs(auth[j] - prev_auth[j]));
        if (it > 1 && diff <= tol) {
            res.converged = true;
            break;
        }
    }
    fix_sign(hub);
    fix_sign(auth);
    res.hub = std::move(hub);
    res.auth = std::move(auth);
    return res;
}

std::vector<double> triangles(const Graph& g) {
    if (g.mode() != GraphMode::homogeneous)
        throw StructuralError("triangle counts require a homogeneous graph");
    std::size_t n = g.n_src();
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (const Edge& e : g.edges()) {
        if (e.src == e.dst) continue;
        adj[e.src].push_back(e.dst);
        adj[e.dst].push_back(e.src);
    }
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    std::vector<double> tri(n, 0.0);
    // Each triangle u < v < w is found exactly once from its smallest node.
    for (std::uint32_t u = 0; u < n; ++u) {
        const auto& au = adj[u];
        for (std::uint32_t v : au) {
            if (v <= u) continue;
            const auto& av = adj[v];
            auto iu = std::upper_bound(au.begin(), au.end(), v);
            auto iv = std::upper_bound(av.begin(), av.end(), v);
            while (iu != au.end() && iv != av.end()) {
                if (*iu < *iv) ++iu;
                else if (*iv < *iu) ++iv;
                else {
                    tri[u] += 1.0;
                    tri[v] += 1.0;
                    tri[*iu] += 1.0;
                    ++iu;
                    ++iv;
                }
            }
        }
    }
    return tri;
}

}  // namespace eaglemine
