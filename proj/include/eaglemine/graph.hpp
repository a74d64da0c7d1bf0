#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace eaglemine {

enum class GraphMode { homogeneous, bipartite };

struct Edge {
    std::uint32_t src = 0;
    std::uint32_t dst = 0;
    double weight = 1.0;
};

/// Directed graph with dense internal ids assigned in first-appearance order.
/// Homogeneous graphs use one id namespace (n_src == n_dst, shared name table).
/// Bipartite graphs keep separate source/target namespaces; by default an
/// original id seen in both columns is rejected, since that would smuggle in a
/// within-side edge.
class Graph {
public:
    Graph() = default;
    Graph(GraphMode mode, std::vector<Edge> edges, std::vector<std::string> src_names,
          std::vector<std::string> dst_names);

    GraphMode mode() const { return mode_; }
    std::uint32_t n_src() const { return static_cast<std::uint32_t>(src_names_.size()); }
    std::uint32_t n_dst() const {
        return mode_ == GraphMode::homogeneous ? n_src()
                                               : static_cast<std::uint32_t>(dst_names_.size());
    }
    const std::vector<Edge>& edges() const { return edges_; }

    const std::vector<std::string>& src_names() const { return src_names_; }
    const std::vector<std::string>& dst_names() const {
        return mode_ == GraphMode::homogeneous ? src_names_ : dst_names_;
    }

private:
    GraphMode mode_ = GraphMode::homogeneous;
    std::vector<Edge> edges_;
    std::vector<std::string> src_names_;
    std::vector<std::string> dst_names_;  // unused in homogeneous mode
};

/// How to map original ids onto namespaces when loading a bipartite edge list.
///  shared: one original-id space; an id appearing in both columns is an error.
///  split:  columns are independent namespaces, no cross-column check.
enum class BipartiteIds { shared, split };

/// Reads "src dst [weight]" lines (whitespace separated, '#'/'%' comments).
/// Ids may be arbitrary strings; they are remapped to dense internal ids in
/// first-appearance order. Self loops are kept. Negative weights are an error.
Graph load_edge_list(const std::string& path, GraphMode mode,
                     BipartiteIds ids = BipartiteIds::shared);
Graph parse_edge_list(std::istream& in, GraphMode mode, BipartiteIds ids = BipartiteIds::shared);

}  // namespace eaglemine
