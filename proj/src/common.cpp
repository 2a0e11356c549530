#include "sedkit/common.hpp"

#include <cstdio>

namespace sedkit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::empty_input: return "empty input";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::config: return "config error";
        case ErrorKind::lookup: return "lookup error";
        case ErrorKind::input_too_short: return "input too short";
        case ErrorKind::dimension: return "dimension error";
        case ErrorKind::label: return "label error";
        case ErrorKind::contract: return "contract error";
        case ErrorKind::dependency: return "dependency error";
        case ErrorKind::io: return "io error";
    }
    return "error";
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace sedkit
