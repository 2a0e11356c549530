#pragma once

// On-disk formats.
//
//   *.wav   RIFF PCM, 16-bit signed little-endian, mono.
//   *.tsv   onset<TAB>offset<TAB>label, 6 decimals, sorted by onset.
//   *.f32   row-major little-endian float32 matrix + *.json sidecar.
//   weights JSON header + *.bin little-endian float64 parameter blob.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedkit/common.hpp"
#include "sedkit/network.hpp"
#include "sedkit/synthscape.hpp"

namespace sedkit::io {

namespace fs = std::filesystem;

void write_wav(const fs::path& path, const synth::AudioClip& clip);
synth::AudioClip read_wav(const fs::path& path);

void write_annotations(const fs::path& path, std::vector<EventAnnotation> events);
std::vector<EventAnnotation> read_annotations(const fs::path& path);

/// Writes `<stem>.f32` and `<stem>.json`; `header` gains rows/cols fields.
void write_matrix_f32(const fs::path& stem, const Matrix& m, nlohmann::json header);
/// Returns the matrix and fills `header` when non-null.
Matrix read_matrix_f32(const fs::path& stem, nlohmann::json* header = nullptr);

struct WeightsFile {
    model::NetworkConfig network;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::string experiment;
    std::vector<double> params;
};

/// Writes `<stem>.json` and `<stem>.bin`.
void write_weights(const fs::path& stem, const WeightsFile& w);
WeightsFile read_weights(const fs::path& stem);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace sedkit::io
