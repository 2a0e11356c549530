#pragma once

#include <span>

#include "sedkit/common.hpp"

namespace sedkit::features {

/// Magnitude STFT, bins x frames.
struct Spectrogram {
    Matrix magnitudes;
    double bin_hz = 0.0;
    double frame_hop = kFrameHop;

    int bins() const { return static_cast<int>(magnitudes.rows()); }
    int frames() const { return static_cast<int>(magnitudes.cols()); }
};

/// Normalized log-mel energies, n_mels x T, every entry in [0, 1].
struct FeatureMatrix {
    Matrix values;
    double frame_hop = kFrameHop;

    int bands() const { return static_cast<int>(values.rows()); }
    int frames() const { return static_cast<int>(values.cols()); }
};

inline constexpr double kLogFloor = 1e-10;

/// Number of frames produced for `n_samples` at `hop`: ceil(n / hop).
int frame_count(std::size_t n_samples, int hop = kHopLength);

/// Periodic-Hann magnitude STFT. The signal is reflection-padded by n_fft/2
/// on both sides and the frame sequence truncated to ceil(N / hop), so a
/// 10 s clip at 44.1 kHz yields exactly 500 frames of n_fft/2 + 1 bins.
Spectrogram stft_magnitude(std::span<const double> samples, int n_fft = kFftSize, int hop = kHopLength,
                           int sample_rate = kSampleRate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// The n_mels + 2 filter edge frequencies (Hz) of the filterbank.
std::vector<double> mel_edges_hz(int n_mels, double fmin, double fmax);

/// HTK-mel triangular filterbank with unit peak, n_mels x (n_fft/2 + 1).
Matrix mel_filterbank(int n_mels = kMelBands, int sample_rate = kSampleRate, int n_fft = kFftSize,
                      double fmin = 0.0, double fmax = kSampleRate / 2.0);

/// log(fb * |X|^2 + 1e-10) followed by a global min-max scaling of the whole
/// matrix to [0, 1]. A constant matrix maps to zeros.
FeatureMatrix log_mel_normalize(const Spectrogram& spec, const Matrix& filterbank);

/// stft_magnitude + log_mel_normalize with the default 40-band filterbank.
FeatureMatrix extract(std::span<const double> samples, int sample_rate = kSampleRate);

}  // namespace sedkit::features
