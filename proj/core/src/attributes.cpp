#include "har/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "har/digest.hpp"
#include "har/errors.hpp"

namespace har {

namespace {

constexpr std::size_t kMutationRetryBudget = 10000;

bool row_is_zero(const std::vector<std::uint8_t>& bits, std::size_t row, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (bits[row * n + i]) return false;
    }
    return true;
}

bool rows_equal(const std::vector<std::uint8_t>& bits, std::size_t a, std::size_t b,
                std::size_t n) {
    return std::equal(bits.begin() + a * n, bits.begin() + (a + 1) * n, bits.begin() + b * n);
}

// Enough distinct non-zero rows must exist: 2^n - 1 >= K.
bool capacity_ok(std::size_t class_count, std::size_t attribute_count) {
    if (attribute_count >= 64) return true;
    return ((std::uint64_t{1} << attribute_count) - 1) >= class_count;
}

}  // namespace

std::vector<std::string> attribute_matrix_violations(std::size_t class_count,
                                                     std::size_t attribute_count,
                                                     const std::vector<std::uint8_t>& bits) {
    std::vector<std::string> issues;
    if (class_count < 1 || attribute_count < 1) {
        issues.push_back("matrix dimensions must be at least 1x1");
        return issues;
    }
    if (bits.size() != class_count * attribute_count) {
        issues.push_back("bit count does not match K x n");
        return issues;
    }
    for (std::uint8_t b : bits) {
        if (b != 0 && b != 1) {
            issues.push_back("entries must be 0 or 1");
            break;
        }
    }
    for (std::size_t k = 0; k < class_count; ++k) {
        if (row_is_zero(bits, k, attribute_count)) {
            issues.push_back("row " + std::to_string(k) + " is all-zero");
        }
    }
    for (std::size_t a = 0; a < class_count; ++a) {
        for (std::size_t b = a + 1; b < class_count; ++b) {
            if (rows_equal(bits, a, b, attribute_count)) {
                issues.push_back("rows " + std::to_string(a) + " and " + std::to_string(b) +
                                 " are identical");
            }
        }
    }
    return issues;
}

AttributeMatrix::AttributeMatrix(std::size_t class_count, std::size_t attribute_count,
                                 std::vector<std::uint8_t> bits)
    : class_count_(class_count), attribute_count_(attribute_count), bits_(std::move(bits)) {
    const auto issues = attribute_matrix_violations(class_count_, attribute_count_, bits_);
    if (!issues.empty()) {
        throw ValidationError("invalid attribute matrix: " + issues.front());
    }
}

std::size_t AttributeMatrix::row_popcount(std::size_t klass) const {
    if (klass >= class_count_) throw ValidationError("class index out of range");
    std::size_t count = 0;
    for (std::size_t i = 0; i < attribute_count_; ++i) count += bit(klass, i);
    return count;
}

std::string AttributeMatrix::digest() const {
    Fnv1a hash;
    const std::string header =
        std::to_string(class_count_) + "," + std::to_string(attribute_count_) + ",";
    hash.update(header);
    hash.update(bits_.data(), bits_.size());
    return hash.hex();
}

nlohmann::json AttributeMatrix::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < class_count_; ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t i = 0; i < attribute_count_; ++i) row.push_back(int(bit(k, i)));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"classes", class_count_}, {"attributes", attribute_count_},
                          {"rows", std::move(rows)}};
}

AttributeMatrix AttributeMatrix::from_json(const nlohmann::json& j) {
    const auto K = j.at("classes").get<std::size_t>();
    const auto n = j.at("attributes").get<std::size_t>();
    std::vector<std::uint8_t> bits;
    bits.reserve(K * n);
    for (const auto& row : j.at("rows")) {
        for (const auto& v : row) bits.push_back(static_cast<std::uint8_t>(v.get<int>()));
    }
    return AttributeMatrix(K, n, std::move(bits));
}

void AttributeMatrix::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write attribute matrix: " + path.string());
    out << "class";
    for (std::size_t i = 0; i < attribute_count_; ++i) out << ",attr_" << i;
    out << "\n";
    for (std::size_t k = 0; k < class_count_; ++k) {
        out << k;
        for (std::size_t i = 0; i < attribute_count_; ++i) out << "," << int(bit(k, i));
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing attribute matrix: " + path.string());
}

AttributeMatrix AttributeMatrix::load_csv(const std::filesystem::path& path) {
    RawAttributeBits raw = load_attribute_csv_raw(path);
    return AttributeMatrix(raw.class_count, raw.attribute_count, std::move(raw.bits));
}

RawAttributeBits load_attribute_csv_raw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read attribute matrix: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty attribute matrix file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) header.push_back(field);
    }
    if (header.empty() || header.front() != "class") {
        throw ValidationError("attribute matrix header must start with 'class': " + path.string());
    }
    const std::size_t n = header.size() - 1;
    if (n == 0) throw ValidationError("attribute matrix has no attribute columns: " + path.string());

    std::map<std::size_t, std::vector<std::uint8_t>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != n + 1) {
            throw ValidationError("attribute matrix row " + std::to_string(line_no) +
                                  " has " + std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(n + 1));
        }
        std::size_t klass = 0;
        std::vector<std::uint8_t> bits(n);
        try {
            klass = std::stoul(fields[0]);
            for (std::size_t i = 0; i < n; ++i) {
                const int v = std::stoi(fields[i + 1]);
                if (v != 0 && v != 1) throw ValidationError("entry not 0/1");
                bits[i] = static_cast<std::uint8_t>(v);
            }
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            throw ValidationError("malformed attribute matrix row " + std::to_string(line_no) +
                                  " in " + path.string());
        }
        if (rows.count(klass)) {
            throw ValidationError("duplicate class id " + std::to_string(klass) + " in " +
                                  path.string());
        }
        rows[klass] = std::move(bits);
    }
    if (rows.empty()) throw ValidationError("attribute matrix has no rows: " + path.string());

    const std::size_t K = rows.size();
    std::vector<std::uint8_t> bits;
    bits.reserve(K * n);
    std::size_t expected = 0;
    for (const auto& [klass, row] : rows) {
        if (klass != expected) {
            throw ValidationError("class ids must be 0..K-1 without gaps in " + path.string());
        }
        bits.insert(bits.end(), row.begin(), row.end());
        ++expected;
    }
    return RawAttributeBits{K, n, std::move(bits)};
}

double MutationConfig::effective_probability(std::size_t attribute_count) const {
    if (flip_probability == 0.0) return 1.0 / static_cast<double>(attribute_count);
    return flip_probability;
}

void MutationConfig::validate(std::size_t attribute_count) const {
    const double p = effective_probability(attribute_count);
    if (!(p > 0.0) || !(p < 1.0)) {
        throw ValidationError("mutation flip probability must be in (0, 1), got " +
                              std::to_string(p));
    }
}

AttributeMatrix random_representation(std::size_t class_count, std::size_t attribute_count,
                                      RngState& rng) {
    if (class_count < 2) throw ValidationError("attribute matrix needs at least 2 classes");
    if (attribute_count < 1) throw ValidationError("attribute count must be >= 1");
    if (!capacity_ok(class_count, attribute_count)) {
        throw ValidationError("attribute count " + std::to_string(attribute_count) +
                              " cannot host " + std::to_string(class_count) +
                              " distinct non-zero rows");
    }

    std::vector<std::uint8_t> bits(class_count * attribute_count, 0);
    for (std::size_t k = 0; k < class_count; ++k) {
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt >= kMutationRetryBudget) {
                throw std::runtime_error("random_representation: retry budget exhausted");
            }
            for (std::size_t i = 0; i < attribute_count; ++i) {
                bits[k * attribute_count + i] = rng.bernoulli(0.5) ? 1 : 0;
            }
            if (row_is_zero(bits, k, attribute_count)) continue;
            bool duplicate = false;
            for (std::size_t prev = 0; prev < k && !duplicate; ++prev) {
                duplicate = rows_equal(bits, prev, k, attribute_count);
            }
            if (!duplicate) break;
        }
    }
    return AttributeMatrix(class_count, attribute_count, std::move(bits));
}

AttributeMatrix mutate(const AttributeMatrix& matrix, const MutationConfig& cfg, RngState& rng) {
    const std::size_t K = matrix.class_count();
    const std::size_t n = matrix.attribute_count();
    const double p = cfg.effective_probability(n);
    if (!(p > 0.0) || p > 1.0) {
        throw ValidationError("mutate: flip probability must be in (0, 1], got " +
                              std::to_string(p));
    }

    for (std::size_t attempt = 0; attempt < kMutationRetryBudget; ++attempt) {
        std::vector<std::uint8_t> bits = matrix.bits();
        if (cfg.scope == MutationConfig::Scope::one_row) {
            const std::size_t row = rng.uniform_index(K);
            for (std::size_t i = 0; i < n; ++i) {
                if (rng.bernoulli(p)) bits[row * n + i] ^= 1;
            }
        } else {
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (rng.bernoulli(p)) bits[k * n + i] ^= 1;
                }
            }
        }
        if (attribute_matrix_violations(K, n, bits).empty()) {
            return AttributeMatrix(K, n, std::move(bits));
        }
    }
    throw std::runtime_error("mutate: no invariant-satisfying mutant within retry budget");
}

std::size_t decode_nearest(const std::vector<double>& scores, const AttributeMatrix& matrix) {
    const std::size_t n = matrix.attribute_count();
    if (scores.size() != n) {
        throw ValidationError("decode_nearest: score width " + std::to_string(scores.size()) +
                              " does not match attribute count " + std::to_string(n));
    }
    double score_norm_sq = 0.0;
    for (double s : scores) {
        if (!std::isfinite(s)) throw ValidationError("decode_nearest: non-finite score");
        score_norm_sq += s * s;
    }
    if (score_norm_sq == 0.0) {
        throw ValidationError("decode_nearest: all-zero score vector (cosine undefined)");
    }
    const double score_norm = std::sqrt(score_norm_sq);

    std::size_t best = 0;
    double best_similarity = -2.0;
    for (std::size_t k = 0; k < matrix.class_count(); ++k) {
        double dot = 0.0;
        double row_norm_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (matrix.bit(k, i)) {
                dot += scores[i];
                row_norm_sq += 1.0;
            }
        }
        const double similarity = dot / (score_norm * std::sqrt(row_norm_sq));
        if (similarity > best_similarity) {
            best_similarity = similarity;
            best = k;
        }
    }
    return best;
}

std::size_t decode_nearest(const Tensor& scores, const AttributeMatrix& matrix) {
    return decode_nearest(scores.values(), matrix);
}

std::size_t shared_attribute_count(const AttributeMatrix& matrix, std::size_t class_i,
                                   std::size_t class_j) {
    if (class_i >= matrix.class_count() || class_j >= matrix.class_count()) {
        throw ValidationError("shared_attribute_count: class index out of range");
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < matrix.attribute_count(); ++i) {
        count += matrix.bit(class_i, i) & matrix.bit(class_j, i);
    }
    return count;
}

Tensor targets_for_batch(const std::vector<int>& labels, const AttributeMatrix& matrix) {
    const std::size_t n = matrix.attribute_count();
    Tensor targets({labels.size(), n});
    for (std::size_t b = 0; b < labels.size(); ++b) {
        const int label = labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= matrix.class_count()) {
            throw ValidationError("targets_for_batch: label " + std::to_string(label) +
                                  " outside [0, " + std::to_string(matrix.class_count()) + ")");
        }
        for (std::size_t i = 0; i < n; ++i) {
            targets(b, i) = matrix.bit(static_cast<std::size_t>(label), i);
        }
    }
    return targets;
}

}  // namespace har
