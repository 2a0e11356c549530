#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sedkit {

enum class ErrorKind {
    empty_input,
    domain,
    config,
    lookup,
    input_too_short,
    dimension,
    label,
    contract,
    dependency,
    io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline constexpr int kSampleRate = 44100;
inline constexpr double kSceneDuration = 10.0;
inline constexpr int kFftSize = 2048;
inline constexpr int kHopLength = 882;
inline constexpr int kMelBands = 40;
inline constexpr double kFrameHop = static_cast<double>(kHopLength) / kSampleRate;  // 20 ms

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using BinaryVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

/// One strongly-labelled sound event, times in seconds.
struct EventAnnotation {
    double onset = 0.0;
    double offset = 0.0;
    std::string label;

    bool operator==(const EventAnnotation&) const = default;
};

/// splitmix64 finalizer; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace sedkit
