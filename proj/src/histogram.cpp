#include "eaglemine/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "eaglemine/errors.hpp"

namespace eaglemine {

namespace {

// floor() with a small forgiveness so exact powers of the base do not fall one
// bin short when log() lands at 2.9999999999999996.
long eps_floor(double x) { return long(std::floor(x + 1e-9)); }

long raw_index(double v, double base, int bpd) {
    return eps_floor(double(bpd) * std::log(v) / std::log(base));
}

void check_axis(const AxisConfig& a) {
    if (!(a.base > 1.0)) throw StructuralError("log binning base must be > 1");
    if (a.bins_per_decade < 1) throw StructuralError("bins_per_decade must be >= 1");
    if (!(a.vmin > 0.0)) throw StructuralError("vmin must be positive");
}

}  // namespace

int log_bucketize(double value, double base, int bins_per_decade, double vmin) {
    AxisConfig a;
    a.base = base;
    a.bins_per_decade = bins_per_decade;
    a.vmin = vmin;
    check_axis(a);
    if (!(value >= 0.0)) throw StructuralError("log_bucketize: value must be >= 0");
    if (value <= vmin) return 0;
    return int(raw_index(value, base, bins_per_decade) - raw_index(vmin, base, bins_per_decade));
}

std::int64_t Histogram::total_mass() const {
    std::int64_t s = 0;
    for (auto h : heights) s += h;
    return s;
}

std::int64_t Histogram::max_height() const {
    std::int64_t m = 0;
    for (auto h : heights) m = std::max(m, h);
    return m;
}

namespace {

std::vector<double> make_edges(const AxisConfig& a, int nbins) {
    std::vector<double> e(std::size_t(nbins) + 1);
    e[0] = 0.0;
    long ref = raw_index(a.vmin, a.base, a.bins_per_decade);
    for (int k = 1; k <= nbins; ++k)
        e[std::size_t(k)] = std::pow(a.base, double(ref + k) / double(a.bins_per_decade));
    return e;
}

void write_axis(std::ofstream& out, const char* tag, const AxisConfig& a, bool degenerate) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", a.vmin);
    out << "# " << tag << " feature=" << a.feature << " base=" << a.base
        << " bins_per_decade=" << a.bins_per_decade << " vmin=" << buf
        << " degenerate=" << (degenerate ? 1 : 0) << "\n";
}

AxisConfig parse_axis(const std::string& line, bool& degenerate) {
    AxisConfig a;
    a.auto_vmin = false;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok >> tok;  // "#", tag
    while (ls >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw ParseError("bad axis line: " + line);
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "feature") a.feature = val;
        else if (key == "base") a.base = std::stod(val);
        else if (key == "bins_per_decade") a.bins_per_decade = std::stoi(val);
        else if (key == "vmin") a.vmin = std::stod(val);
        else if (key == "degenerate") degenerate = val == "1";
        else throw ParseError("unknown axis key '" + key + "'");
    }
    return a;
}

}  // namespace

void Histogram::write(const std::string& path, const std::vector<std::string>& preamble) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write histogram: " + path);
    out << "# eaglemine-histogram/1\n";
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "# rows=" << rows << " cols=" << cols << "\n";
    write_axis(out, "row_axis", row_axis, degenerate_rows);
    write_axis(out, "col_axis", col_axis, degenerate_cols);
    out << "row,col,height\n";
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (at(r, c) != 0) out << r << ',' << c << ',' << at(r, c) << '\n';
}

Histogram Histogram::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open histogram: " + path);
    Histogram h;
    std::string line;
    bool have_magic = false, have_dims = false, have_data_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# eaglemine-histogram/", 0) == 0) {
                if (line != "# eaglemine-histogram/1")
                    throw ParseError(path + ": unsupported histogram schema '" +
                                     line.substr(2) + "' (this build reads eaglemine-histogram/1)");
                have_magic = true;
            }
            else if (line.rfind("# rows=", 0) == 0) {
                if (std::sscanf(line.c_str(), "# rows=%d cols=%d", &h.rows, &h.cols) != 2)
                    throw ParseError(path + ": bad dimension line");
                have_dims = true;
            } else if (line.rfind("# row_axis ", 0) == 0) {
                h.row_axis = parse_axis(line, h.degenerate_rows);
            } else if (line.rfind("# col_axis ", 0) == 0) {
                h.col_axis = parse_axis(line, h.degenerate_cols);
            }
            continue;
        }
        if (!have_data_header) {
            if (line != "row,col,height")
                throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'row,col,height' header");
            if (!have_magic || !have_dims)
                throw ParseError(path + ": missing histogram header comments");
            if (h.rows <= 0 || h.cols <= 0) throw ParseError(path + ": bad dimensions");
            h.heights.assign(std::size_t(h.rows) * h.cols, 0);
            have_data_header = true;
            continue;
        }
        int r, c;
        long long v;
        if (std::sscanf(line.c_str(), "%d,%d,%lld", &r, &c, &v) != 3)
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad data line");
        if (!h.in_bounds(r, c) || v < 0)
            throw ParseError(path + ":" + std::to_string(lineno) + ": cell out of range");
        h.at(r, c) = v;
    }
    if (!have_data_header) throw ParseError(path + ": missing histogram data header");
    h.row_edges = make_edges(h.row_axis, h.rows);
    h.col_edges = make_edges(h.col_axis, h.cols);
    return h;
}

void CellMap::write_tsv(const std::string& path, const std::vector<std::string>& preamble) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write cell map: " + path);
    for (const auto& line : preamble) out << "# " << line << "\n";
    out << "node_id\trow\tcol\n";
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << ids[i] << '\t' << cells[i].r << '\t' << cells[i].c << '\n';
}

CellMap CellMap::read_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open cell map: " + path);
    CellMap m;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!have_header) {
            if (line != "node_id\trow\tcol")
                throw ParseError(path + ": expected 'node_id<TAB>row<TAB>col' header");
            have_header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string id, rs, cs;
        if (!std::getline(ls, id, '\t') || !std::getline(ls, rs, '\t') || !std::getline(ls, cs))
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad cell map line");
        m.ids.push_back(id);
        m.cells.push_back(Cell{std::stoi(rs), std::stoi(cs)});
    }
    if (!have_header) throw ParseError(path + ": empty cell map");
    return m;
}

std::pair<Histogram, CellMap> build_histogram(const FeatureTable& t, AxisConfig x_axis,
                                              AxisConfig y_axis) {
    const std::vector<double>* xs = t.find(x_axis.feature);
    const std::vector<double>* ys = t.find(y_axis.feature);
    if (!xs) throw StructuralError("feature '" + x_axis.feature + "' not in table");
    if (!ys) throw StructuralError("feature '" + y_axis.feature + "' not in table");

    auto resolve = [&](AxisConfig a, const std::vector<double>& vals, bool& degenerate) {
        check_axis(a);
        for (double v : vals)
            if (!std::isfinite(v) || v < 0.0)
                throw StructuralError("feature '" + a.feature + "' has a negative or non-finite value");
        if (a.auto_vmin) {
            double smallest = std::numeric_limits<double>::infinity();
            for (double v : vals)
                if (v > 0.0) smallest = std::min(smallest, v);
            if (std::isfinite(smallest)) {
                a.vmin = smallest;
            } else {
                a.vmin = 1.0;  // all zeros: everything lands in bin 0
                degenerate = true;
            }
            a.auto_vmin = false;
        }
        return a;
    };

    Histogram h;
    h.row_axis = resolve(x_axis, *xs, h.degenerate_rows);
    h.col_axis = resolve(y_axis, *ys, h.degenerate_cols);

    std::size_t n = t.rows();
    CellMap map;
    map.ids = t.ids;
    map.cells.resize(n);
    int max_r = 0, max_c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int r = log_bucketize((*xs)[i], h.row_axis.base, h.row_axis.bins_per_decade, h.row_axis.vmin);
        int c = log_bucketize((*ys)[i], h.col_axis.base, h.col_axis.bins_per_decade, h.col_axis.vmin);
        map.cells[i] = Cell{r, c};
        max_r = std::max(max_r, r);
        max_c = std::max(max_c, c);
    }
    h.rows = max_r + 1;
    h.cols = max_c + 1;
    if (std::int64_t(h.rows) * h.cols > std::int64_t(50'000'000))
        throw StructuralError("histogram grid too large; raise vmin or lower bins_per_decade");
    h.heights.assign(std::size_t(h.rows) * h.cols, 0);
    for (std::size_t i = 0; i < n; ++i) ++h.at(map.cells[i].r, map.cells[i].c);
    h.row_edges = make_edges(h.row_axis, h.rows);
    h.col_edges = make_edges(h.col_axis, h.cols);
    return {std::move(h), std::move(map)};
}

}  // namespace eaglemine
