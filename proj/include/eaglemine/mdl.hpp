#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eaglemine/eaglemine.hpp"
#include "eaglemine/histogram.hpp"

namespace eaglemine {

/// Append-only bit buffer, most significant bit of each byte first.
class BitWriter {
public:
    void push(bool bit);
    std::size_t size() const { return nbits_; }
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

class BitReader {
public:
    BitReader(const std::vector<std::uint8_t>& bytes, std::size_t nbits)
        : bytes_(bytes), nbits_(nbits) {}
    bool next();
    bool exhausted() const { return pos_ >= nbits_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t nbits_ = 0;
    std::size_t pos_ = 0;
};

/// Elias gamma / delta codes for integers m >= 1.
void elias_gamma_encode(BitWriter& w, std::uint64_t m);
std::uint64_t elias_gamma_decode(BitReader& r);
int elias_gamma_length(std::uint64_t m);
void elias_delta_encode(BitWriter& w, std::uint64_t m);
std::uint64_t elias_delta_decode(BitReader& r);
int elias_delta_length(std::uint64_t m);

/// Signed wrapper used for residuals and counts: one sign bit (0 when x >= 0)
/// followed by the code of |x| + 1, so 0 costs 2 bits, +-3 cost 6, 100 costs 14
/// under the gamma variant.
void elias_signed_encode(BitWriter& w, std::int64_t x, bool use_delta = false);
std::int64_t elias_signed_decode(BitReader& r, bool use_delta = false);
int elias_signed_length(std::int64_t x, bool use_delta = false);

/// Description length of a cluster summary against its histogram:
///   component-count code, then per component 5 float32 parameters and its
///   point count, then one signed residual per cell where the data or the
///   reconstruction is non-zero. Reconstructed heights are the expected counts
///   sum_i n_i * P_i(cell), rounded half to even.
struct MdlModelCost {
    int components = 0;
    double param_bits = 0.0;
    double n_bits = 0.0;
};

struct MdlReport {
    int k_total = 0;  // components, a mixture counting as 2
    double k_bits = 0.0;
    double param_bits = 0.0;
    double n_bits = 0.0;
    double model_bits = 0.0;  // k_bits + param_bits + n_bits
    double error_bits = 0.0;
    double total_bits = 0.0;
    std::int64_t error_cells = 0;  // cells contributing residual codes
    std::vector<MdlModelCost> per_model;

    std::string to_json(int indent = 2) const;
};

inline constexpr int kBitsPerParameter = 32;

MdlReport summary_mdl(const Summary& s, const Histogram& h, bool use_delta = false);

}  // namespace eaglemine
