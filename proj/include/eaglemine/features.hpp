#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eaglemine/graph.hpp"

namespace eaglemine {

enum class Direction { in, out, total };
enum class Side { src, dst };

/// Per-node feature columns for one side of a graph, addressed by name.
struct FeatureTable {
    std::vector<std::string> ids;  // original node ids, row order
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;  // columns[k].size() == ids.size()

    std::size_t rows() const { return ids.size(); }
    void add(std::string name, std::vector<double> col);
    const std::vector<double>* find(const std::string& name) const;

    /// One header line "node_id<TAB>name1...", then one row per node.
    /// Values print with 17 significant digits so doubles survive a roundtrip.
    /// Lines in `preamble` are emitted first, each prefixed with "# ".
    void write_tsv(const std::string& path, const std::vector<std::string>& preamble = {}) const;
    static FeatureTable read_tsv(const std::string& path);
};

/// Weighted degree of every node on `side` (src column for homogeneous graphs).
/// total = in + out; for bipartite graphs src nodes have only out degree and
/// dst nodes only in degree, the other direction is zero.
std::vector<double> degrees(const Graph& g, Direction dir, Side side = Side::src);

struct PageRankResult {
    std::vector<double> scores;
    int iterations = 0;
    bool converged = false;
};

/// Power iteration with uniform teleport; dangling mass is redistributed
/// uniformly each step, so the scores sum to 1. Homogeneous graphs only.
PageRankResult pagerank(const Graph& g, double damping = 0.85, double tol = 1e-10,
                        int max_iters = 200);

struct HubAuthResult {
    std::vector<double> hub;   // per src-side node
    std::vector<double> auth;  // per dst-side node
    int iterations = 0;
    bool converged = false;
    bool zero_matrix = false;  // no edges: scores are all zero
};

/// Alternating power iteration on the (weighted) adjacency matrix: hub ∝ A·auth,
/// auth ∝ Aᵀ·hub, each normalized to unit 2-norm per step. Signs are fixed so
/// the largest-magnitude entry of each vector is positive.
HubAuthResult hubness_authority(const Graph& g, double tol = 1e-12, int max_iters = 500);

/// Number of triangles through each node, edges deduplicated and undirected,
/// self loops ignored. Homogeneous graphs only.
std::vector<double> triangles(const Graph& g);

}  // namespace eaglemine
