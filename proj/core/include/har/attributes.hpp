#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "har/rng.hpp"
#include "har/tensor.hpp"

namespace har {

/// K x n binary matrix assigning each action class a row of attributes.
/// Rows are non-zero and pairwise distinct so that cosine decoding is
/// well defined and unambiguous. Immutable value type.
class AttributeMatrix {
public:
    AttributeMatrix(std::size_t class_count, std::size_t attribute_count,
                    std::vector<std::uint8_t> bits);

    std::size_t class_count() const { return class_count_; }
    std::size_t attribute_count() const { return attribute_count_; }

    std::uint8_t bit(std::size_t klass, std::size_t attribute) const {
        return bits_[klass * attribute_count_ + attribute];
    }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    std::size_t row_popcount(std::size_t klass) const;

    /// Stable content digest ("K,n,bits"); used in fitness histories.
    std::string digest() const;

    nlohmann::json to_json() const;
    static AttributeMatrix from_json(const nlohmann::json& j);

    /// CSV with header "class,attr_0,...,attr_{n-1}", one row per class.
    void save_csv(const std::filesystem::path& path) const;
    static AttributeMatrix load_csv(const std::filesystem::path& path);

    bool operator==(const AttributeMatrix& other) const = default;

private:
    std::size_t class_count_;
    std::size_t attribute_count_;
    std::vector<std::uint8_t> bits_;  // row-major K x n
};

/// Returns the reasons the given bits violate the matrix invariants
/// (entries not 0/1, all-zero rows, duplicate rows); empty when valid.
std::vector<std::string> attribute_matrix_violations(std::size_t class_count,
                                                     std::size_t attribute_count,
                                                     const std::vector<std::uint8_t>& bits);

/// Attribute CSV contents before invariant checking; lets `inspect`
/// report violations instead of refusing to parse.
struct RawAttributeBits {
    std::size_t class_count = 0;
    std::size_t attribute_count = 0;
    std::vector<std::uint8_t> bits;
};

RawAttributeBits load_attribute_csv_raw(const std::filesystem::path& path);

struct MutationConfig {
    enum class Scope { one_row, all_rows };

    double flip_probability = 0.0;  // 0 means "use 1/n"
    Scope scope = Scope::one_row;

    double effective_probability(std::size_t attribute_count) const;
    void validate(std::size_t attribute_count) const;
};

/// Random matrix with i.i.d. Bernoulli(0.5) bits; rows violating the
/// invariants are redrawn. Requires that enough distinct non-zero rows
/// exist (2^n - 1 >= K).
AttributeMatrix random_representation(std::size_t class_count, std::size_t attribute_count,
                                      RngState& rng);

/// Global bit-flip mutation. In one-row scope a uniformly chosen row has
/// each bit flipped independently with the flip probability; in all-rows
/// scope every row is flipped that way. The draw is repeated (bounded)
/// until the result satisfies the matrix invariants. Input is unmodified.
AttributeMatrix mutate(const AttributeMatrix& matrix, const MutationConfig& cfg, RngState& rng);

/// Nearest class under cosine distance 1 - (s . a_k) / (|s| |a_k|);
/// ties broken by the lowest class index. Throws on an all-zero score
/// vector (cosine undefined).
std::size_t decode_nearest(const std::vector<double>& scores, const AttributeMatrix& matrix);
std::size_t decode_nearest(const Tensor& scores, const AttributeMatrix& matrix);

/// Number of attribute positions where both class rows are 1.
std::size_t shared_attribute_count(const AttributeMatrix& matrix, std::size_t class_i,
                                   std::size_t class_j);

/// Binary training targets: one matrix row per label, as a [B, n] tensor.
Tensor targets_for_batch(const std::vector<int>& labels, const AttributeMatrix& matrix);

}  // namespace har
