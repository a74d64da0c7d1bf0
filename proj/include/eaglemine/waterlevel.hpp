#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaglemine/histogram.hpp"

namespace eaglemine {

/// Dense binary image over the histogram grid.
struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> v;  // row-major, 0/1

    Mask() = default;
    Mask(int r, int c) : rows(r), cols(c), v(std::size_t(r) * c, 0) {}
    bool at(int r, int c) const { return v[std::size_t(r) * cols + c] != 0; }
    void set(int r, int c, bool b) { v[std::size_t(r) * cols + c] = b ? 1 : 0; }
    bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
    std::int64_t count() const;
    bool operator==(const Mask&) const = default;
};

/// Cells with log(height) >= level (natural log; empty cells never pass).
Mask flood(const Histogram& h, double level);

/// Morphological opening: union of all placements of `element` that fit
/// entirely inside the mask. Anti-extensive, idempotent, monotone.
Mask binary_open(const Mask& m, const Mask& element);
Mask open_square2(const Mask& m);  // 2x2 structuring element, the smoothing probe

/// 8-connected components, cells sorted row-major, components ordered by their
/// first cell.
std::vector<std::vector<Cell>> connected_components(const Mask& m);

/// One island of the water-level tree. After contraction a node keeps the
/// cells of the shallowest level at which it was a component of its own, so
/// `cells` is the island's full extent at birth, not just its peak.
struct Island {
    int id = -1;
    int level_index = 0;    // water level counter, 0 = base flood
    double level = 0.0;     // log-height threshold at birth
    std::vector<Cell> cells;  // sorted row-major
    std::int64_t area = 0;    // cells.size()
    std::int64_t mass = 0;    // sum of heights over cells
    std::vector<Cell> ring;   // cells absorbed by expand(), sorted
    int parent = -1;
    std::vector<int> children;
    bool alive = true;
    bool is_root = false;
};

/// Hierarchy of islands produced by flooding the histogram at rising levels.
/// The root is synthetic and holds every non-empty cell. Node ids are assigned
/// level by level in scan order and stay stable across contract/prune/expand;
/// removed nodes keep their slot with alive = false.
struct WaterLevelTree {
    std::vector<Island> nodes;  // nodes[id].id == id
    int root = -1;
    std::vector<double> levels;  // log-height threshold per level index

    const Island& node(int id) const { return nodes[std::size_t(id)]; }
    Island& node(int id) { return nodes[std::size_t(id)]; }
    std::vector<int> alive_ids() const;
    int depth() const;  // edges on the longest root-to-leaf path over alive nodes

    std::string to_json(const std::string& config_echo = {}) const;
};

/// Builds the raw tree: flood at each level, smooth with a 2x2 opening, take
/// 8-connected components, link each component to the component it grew out
/// of one level below. Levels run from 0 to log(max height) in `level_step`
/// increments; level_step <= 0 picks log(max height)/20. A histogram with all
/// heights <= 1 yields the single level 0.
WaterLevelTree build_tree(const Histogram& h, double level_step = 0.0);

/// Drops every non-root node with exactly one child; the child takes over the
/// dropped node's cells, level and mass, so each survivor keeps the extent it
/// had just after the split that created it. Idempotent.
void contract(WaterLevelTree& t);

/// Walking top-down, removes all children of a node when their total area is
/// less than half of the node's area (the children and their subtrees die
/// together). Never increases depth.
void prune(WaterLevelTree& t);

/// Grows each island outward into non-empty 8-neighbor cells that belong to no
/// rival island, lowest id first, until the next cell would overlap a rival or
/// the area would exceed twice the birth area. Absorbed cells land in `ring`;
/// topology is untouched. Cells of a strict ancestor are fair game (they are
/// the water the island rose out of), cells of any other island are not.
void expand(WaterLevelTree& t, const Histogram& h);

}  // namespace eaglemine
