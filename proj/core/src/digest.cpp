#include "har/digest.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "har/errors.hpp"

namespace har {

Fnv1a& Fnv1a::update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        state_ ^= bytes[i];
        state_ *= 0x100000001b3ULL;
    }
    return *this;
}

std::string Fnv1a::hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(state_));
    return std::string(buf);
}

std::string digest_string(std::string_view s) { return Fnv1a().update(s).hex(); }

std::string digest_doubles(std::span<const double> values) {
    return Fnv1a().update(values).hex();
}

std::string digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read file for digest: " + path.string());
    Fnv1a hash;
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        hash.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return hash.hex();
}

}  // namespace har
