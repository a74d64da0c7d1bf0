#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eaglemine/features.hpp"

namespace eaglemine {

/// One grid cell, row = x-feature bin, col = y-feature bin.
struct Cell {
    std::int32_t r = 0;
    std::int32_t c = 0;
    auto operator<=>(const Cell&) const = default;
};

/// Logarithmic bin index of `value`. Bin 0 starts at `vmin` and also swallows
/// everything below it (including 0). With vmin = 1, base 10 and 10 bins per
/// decade each decade splits into 10 bins: 1 -> 0, 10 -> 10, 100 -> 20.
int log_bucketize(double value, double base = 10.0, int bins_per_decade = 10, double vmin = 1.0);

struct AxisConfig {
    std::string feature;
    double base = 10.0;
    int bins_per_decade = 10;
    double vmin = 1.0;
    bool auto_vmin = true;  // resolve vmin to the smallest positive value seen
};

/// Dense 2-d count grid over log-binned feature pairs.
struct Histogram {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> heights;  // row-major, rows*cols
    AxisConfig row_axis, col_axis;      // resolved configs (auto_vmin already applied)
    std::vector<double> row_edges, col_edges;  // edges[k] = lower edge of bin k, edges[0] = 0
    bool degenerate_rows = false;  // axis had no positive values; single bin 0
    bool degenerate_cols = false;

    std::int64_t at(int r, int c) const { return heights[std::size_t(r) * cols + c]; }
    std::int64_t& at(int r, int c) { return heights[std::size_t(r) * cols + c]; }
    bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
    std::int64_t total_mass() const;
    std::int64_t max_height() const;

    void write(const std::string& path, const std::vector<std::string>& preamble = {}) const;
    static Histogram read(const std::string& path);
};

/// node row index -> grid cell; cell (-1,-1) marks an unmapped node.
struct CellMap {
    std::vector<std::string> ids;
    std::vector<Cell> cells;

    void write_tsv(const std::string& path, const std::vector<std::string>& preamble = {}) const;
    static CellMap read_tsv(const std::string& path);
};

/// Bins features x (rows) and y (cols) of `t`. Every node lands in some cell
/// (negative feature values are an error), so total mass == number of rows.
std::pair<Histogram, CellMap> build_histogram(const FeatureTable& t, AxisConfig x_axis,
                                              AxisConfig y_axis);

}  // namespace eaglemine
