#include "eaglemine/mdl.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "eaglemine/errors.hpp"

namespace eaglemine {

void BitWriter::push(bool bit) {
    if (nbits_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= std::uint8_t(0x80u >> (nbits_ % 8));
    ++nbits_;
}

bool BitReader::next() {
    if (pos_ >= nbits_) throw ParseError("bit stream exhausted");
    bool b = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return b;
}

namespace {

int bit_width(std::uint64_t m) {  // position of the highest set bit, 1-based
    int n = 0;
    while (m) {
        ++n;
        m >>= 1;
    }
    return n;
}

}  // namespace

void elias_gamma_encode(BitWriter& w, std::uint64_t m) {
    if (m == 0) throw StructuralError("gamma code needs m >= 1");
    int nb = bit_width(m);
    for (int i = 0; i < nb - 1; ++i) w.push(false);
    for (int i = nb - 1; i >= 0; --i) w.push((m >> i) & 1u);
}

std::uint64_t elias_gamma_decode(BitReader& r) {
    int zeros = 0;
    while (!r.next()) ++zeros;
    std::uint64_t m = 1;
    for (int i = 0; i < zeros; ++i) m = (m << 1) | std::uint64_t(r.next());
    return m;
}

int elias_gamma_length(std::uint64_t m) {
    if (m == 0) throw StructuralError("gamma code needs m >= 1");
    return 2 * bit_width(m) - 1;
}

void elias_delta_encode(BitWriter& w, std::uint64_t m) {
    if (m == 0) throw StructuralError("delta code needs m >= 1");
    int nb = bit_width(m);
    elias_gamma_encode(w, std::uint64_t(nb));
    for (int i = nb - 2; i >= 0; --i) w.push((m >> i) & 1u);
}

std::uint64_t elias_delta_decode(BitReader& r) {
    int nb = int(elias_gamma_decode(r));
    std::uint64_t m = 1;
    for (int i = 0; i < nb - 1; ++i) m = (m << 1) | std::uint64_t(r.next());
    return m;
}

int elias_delta_length(std::uint64_t m) {
    if (m == 0) throw StructuralError("delta code needs m >= 1");
    int nb = bit_width(m);
    return elias_gamma_length(std::uint64_t(nb)) + nb - 1;
}

void elias_signed_encode(BitWriter& w, std::int64_t x, bool use_delta) {
    w.push(x < 0);
    std::uint64_t m = (x < 0 ? std::uint64_t(-(x + 1)) + 1 : std::uint64_t(x)) + 1;
    if (use_delta) elias_delta_encode(w, m);
    else elias_gamma_encode(w, m);
}

std::int64_t elias_signed_decode(BitReader& r, bool use_delta) {
    bool neg = r.next();
    std::uint64_t m = use_delta ? elias_delta_decode(r) : elias_gamma_decode(r);
    std::int64_t mag = std::int64_t(m - 1);
    return neg ? -mag : mag;
}

int elias_signed_length(std::int64_t x, bool use_delta) {
    std::uint64_t m = (x < 0 ? std::uint64_t(-(x + 1)) + 1 : std::uint64_t(x)) + 1;
    return 1 + (use_delta ? elias_delta_length(m) : elias_gamma_length(m));
}

namespace {

std::int64_t round_half_even(double x) {
    double f = std::floor(x);
    double frac = x - f;
    if (frac > 0.5) return std::int64_t(f) + 1;
    if (frac < 0.5) return std::int64_t(f);
    std::int64_t fi = std::int64_t(f);
    return fi % 2 == 0 ? fi : fi + 1;
}

}  // namespace

MdlReport summary_mdl(const Summary& s, const Histogram& h, bool use_delta) {
    MdlReport rep;
    std::vector<double> expected(std::size_t(h.rows) * h.cols, 0.0);
    std::vector<Cell> grid;
    grid.reserve(expected.size());
    for (int r = 0; r < h.rows; ++r)
        for (int c = 0; c < h.cols; ++c) grid.push_back(Cell{r, c});

    for (const DtmModel& m : s.models) {
        MdlModelCost cost;
        cost.components = m.kind == ModelKind::mixture2 ? 2 : 1;
        cost.param_bits = double(cost.components) * 5.0 * kBitsPerParameter;
        if (m.kind == ModelKind::mixture2) {
            std::int64_t hi = (m.n + 1) / 2, lo = m.n / 2;
            cost.n_bits = double(elias_signed_length(hi, use_delta)) +
                          double(elias_signed_length(lo, use_delta));
        } else {
            cost.n_bits = double(elias_signed_length(m.n, use_delta));
        }
        rep.k_total += cost.components;
        rep.param_bits += cost.param_bits;
        rep.n_bits += cost.n_bits;
        rep.per_model.push_back(cost);

        std::vector<double> probs = model_cell_probabilities(m, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            expected[i] += double(m.n) * probs[i];
    }

    rep.k_bits = double(elias_signed_length(std::int64_t(rep.k_total), use_delta));
    rep.model_bits = rep.k_bits + rep.param_bits + rep.n_bits;

    for (std::size_t i = 0; i < expected.size(); ++i) {
        std::int64_t want = h.heights[i];
        std::int64_t got = round_half_even(expected[i]);
        if (want == 0 && got == 0) continue;
        rep.error_bits += double(elias_signed_length(want - got, use_delta));
        ++rep.error_cells;
    }
    rep.total_bits = rep.model_bits + rep.error_bits;
    return rep;
}

std::string MdlReport::to_json(int indent) const {
    nlohmann::json j;
    j["schema"] = "eaglemine-mdl/1";
    j["k_total"] = k_total;
    j["k_bits"] = k_bits;
    j["param_bits"] = param_bits;
    j["n_bits"] = n_bits;
    j["model_bits"] = model_bits;
    j["error_bits"] = error_bits;
    j["total_bits"] = total_bits;
    j["error_cells"] = error_cells;
    nlohmann::json pm = nlohmann::json::array();
    for (const MdlModelCost& c : per_model)
        pm.push_back({{"components", c.components}, {"param_bits", c.param_bits}, {"n_bits", c.n_bits}});
    j["per_model"] = std::move(pm);
    return j.dump(indent);
}

}  // namespace eaglemine
