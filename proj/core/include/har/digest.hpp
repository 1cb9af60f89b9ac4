#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace har {

/// Incremental FNV-1a 64-bit hash. Used for run manifests, attribute-matrix
/// digests, and parameter-initialization digests; stable across runs.
class Fnv1a {
public:
    Fnv1a& update(const void* data, std::size_t size);
    Fnv1a& update(std::string_view s) { return update(s.data(), s.size()); }
    Fnv1a& update(std::span<const double> values) {
        return update(values.data(), values.size() * sizeof(double));
    }
    std::uint64_t value() const { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string digest_string(std::string_view s);
std::string digest_doubles(std::span<const double> values);

/// Digest of a file's raw bytes. Throws ValidationError when unreadable.
std::string digest_file(const std::filesystem::path& path);

}  // namespace har
