#include "eaglemine/graph.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "eaglemine/errors.hpp"

namespace eaglemine {

Graph::Graph(GraphMode mode, std::vector<Edge> edges, std::vector<std::string> src_names,
             std::vector<std::string> dst_names)
    : mode_(mode),
      edges_(std::move(edges)),
      src_names_(std::move(src_names)),
      dst_names_(std::move(dst_names)) {}

namespace {

bool parse_weight(const std::string& tok, double& out) {
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

}  // namespace

Graph parse_edge_list(std::istream& in, GraphMode mode, BipartiteIds ids) {
    std::unordered_map<std::string, std::uint32_t> src_map;
    std::unordered_map<std::string, std::uint32_t> dst_map;
    std::vector<std::string> src_names;
    std::vector<std::string> dst_names;
    std::vector<Edge> edges;

    const bool split = mode == GraphMode::homogeneous || ids == BipartiteIds::split;
    // In bipartite shared mode both columns draw from one original-id space and
    // the side of each id is pinned at first sight; 0 = src side, 1 = dst side.
    std::unordered_map<std::string, int> side_of;

    auto intern = [&](const std::string& tok, bool is_dst) -> std::uint32_t {
        auto& map = (mode == GraphMode::bipartite && is_dst) ? dst_map : src_map;
        auto& names = (mode == GraphMode::bipartite && is_dst) ? dst_names : src_names;
        auto it = map.find(tok);
        if (it != map.end()) return it->second;
        auto id = static_cast<std::uint32_t>(names.size());
        map.emplace(tok, id);
        names.push_back(tok);
        return id;
    };

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> toks;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#' || line[first] == '%') continue;

        toks.clear();
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) toks.push_back(tok);
        if (toks.size() < 2 || toks.size() > 3)
            throw ParseError("edge list line " + std::to_string(lineno) + ": expected 'src dst [weight]'");

        double w = 1.0;
        if (toks.size() == 3) {
            if (!parse_weight(toks[2], w))
                throw ParseError("edge list line " + std::to_string(lineno) + ": bad weight '" + toks[2] + "'");
            if (w < 0.0)
                throw ParseError("edge list line " + std::to_string(lineno) + ": negative weight");
        }

        if (mode == GraphMode::bipartite && !split) {
            for (int c = 0; c < 2; ++c) {
                auto [it, inserted] = side_of.try_emplace(toks[c], c);
                if (!inserted && it->second != c)
                    throw StructuralError("edge list line " + std::to_string(lineno) + ": id '" + toks[c] +
                                          "' appears on both sides of a bipartite graph");
            }
        }

        Edge e;
        e.src = intern(toks[0], false);
        e.dst = intern(toks[1], true);
        e.weight = w;
        edges.push_back(e);
    }
    return Graph(mode, std::move(edges), std::move(src_names), std::move(dst_names));
}

Graph load_edge_list(const std::string& path, GraphMode mode, BipartiteIds ids) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open edge list: " + path);
    return parse_edge_list(in, mode, ids);
}

}  // namespace eaglemine
