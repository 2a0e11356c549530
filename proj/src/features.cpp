#include "sedkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include <fftw3.h>

namespace sedkit::features {

namespace {

// Owns one r2c plan and its aligned buffers.
class RealFft {
public:
    explicit RealFft(int n)
        : n_(n),
          in_(fftw_alloc_real(static_cast<std::size_t>(n)), &fftw_free),
          out_(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1)), &fftw_free) {
        plan_ = fftw_plan_dft_r2c_1d(n, in_.get(), out_.get(), FFTW_ESTIMATE);
    }
    ~RealFft() { fftw_destroy_plan(plan_); }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    double* input() { return in_.get(); }

    void magnitudes(double* dst) {
        fftw_execute(plan_);
        const auto* out = out_.get();
        for (int k = 0; k <= n_ / 2; ++k) {
            dst[k] = std::sqrt(out[k][0] * out[k][0] + out[k][1] * out[k][1]);
        }
    }

private:
    int n_;
    std::unique_ptr<double, decltype(&fftw_free)> in_;
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_;
    fftw_plan plan_ = nullptr;
};

std::vector<double> periodic_hann(int n) {
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    }
    return w;
}

}  // namespace

int frame_count(std::size_t n_samples, int hop) {
    return static_cast<int>((n_samples + static_cast<std::size_t>(hop) - 1) / static_cast<std::size_t>(hop));
}

Spectrogram stft_magnitude(std::span<const double> samples, int n_fft, int hop, int sample_rate) {
    if (n_fft < 2 || hop < 1) {
        throw Error(ErrorKind::domain, "n_fft must be >= 2 and hop >= 1");
    }
    if (samples.size() < static_cast<std::size_t>(n_fft)) {
        throw Error(ErrorKind::input_too_short, "input has " + std::to_string(samples.size()) +
                                                    " samples, fewer than one window of " + std::to_string(n_fft));
    }
    const auto n = static_cast<std::ptrdiff_t>(samples.size());
    const std::ptrdiff_t pad = n_fft / 2;
    const auto reflect = [n](std::ptrdiff_t j) {
        if (j < 0) return -j;
        if (j >= n) return 2 * (n - 1) - j;
        return j;
    };

    const int frames = frame_count(samples.size(), hop);
    Spectrogram spec;
    spec.bin_hz = static_cast<double>(sample_rate) / n_fft;
    spec.frame_hop = static_cast<double>(hop) / sample_rate;
    spec.magnitudes.resize(n_fft / 2 + 1, frames);

    const auto window = periodic_hann(n_fft);
    RealFft fft(n_fft);
    double* in = fft.input();
    for (int t = 0; t < frames; ++t) {
        const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * hop - pad;
        for (int i = 0; i < n_fft; ++i) {
            in[i] = samples[static_cast<std::size_t>(reflect(start + i))] * window[static_cast<std::size_t>(i)];
        }
        fft.magnitudes(spec.magnitudes.col(t).data());
    }
    return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_edges_hz(int n_mels, double fmin, double fmax) {
    const double lo = hz_to_mel(fmin);
    const double hi = hz_to_mel(fmax);
    std::vector<double> edges(static_cast<std::size_t>(n_mels) + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (n_mels + 1));
    }
    return edges;
}

Matrix mel_filterbank(int n_mels, int sample_rate, int n_fft, double fmin, double fmax) {
    if (n_mels < 1) {
        throw Error(ErrorKind::domain, "n_mels must be >= 1");
    }
    if (fmax > sample_rate / 2.0) {
        throw Error(ErrorKind::domain, "fmax above the Nyquist frequency");
    }
    if (fmin < 0.0 || fmin >= fmax) {
        throw Error(ErrorKind::domain, "require 0 <= fmin < fmax");
    }
    const int bins = n_fft / 2 + 1;
    const auto edges = mel_edges_hz(n_mels, fmin, fmax);
    Matrix fb = Matrix::Zero(n_mels, bins);
    for (int m = 0; m < n_mels; ++m) {
        const double left = edges[static_cast<std::size_t>(m)];
        const double center = edges[static_cast<std::size_t>(m) + 1];
        const double right = edges[static_cast<std::size_t>(m) + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / n_fft;
            const double rising = (f - left) / (center - left);
            const double falling = (right - f) / (right - center);
            fb(m, k) = std::max(0.0, std::min(rising, falling));
        }
    }
    return fb;
}

FeatureMatrix log_mel_normalize(const Spectrogram& spec, const Matrix& filterbank) {
    if (filterbank.cols() != spec.magnitudes.rows()) {
        throw Error(ErrorKind::dimension, "filterbank has " + std::to_string(filterbank.cols()) +
                                              " bins, spectrogram has " + std::to_string(spec.magnitudes.rows()));
    }
    FeatureMatrix out;
    out.frame_hop = spec.frame_hop;
    const Matrix power = spec.magnitudes.array().square().matrix();
    out.values = ((filterbank * power).array() + kLogFloor).log().matrix();
    if (out.values.size() == 0) {
        return out;
    }
    const double lo = out.values.minCoeff();
    const double hi = out.values.maxCoeff();
    if (hi > lo) {
        out.values = ((out.values.array() - lo) / (hi - lo)).matrix();
    } else {
        out.values.setZero();
    }
    return out;
}

FeatureMatrix extract(std::span<const double> samples, int sample_rate) {
    const auto spec = stft_magnitude(samples, kFftSize, kHopLength, sample_rate);
    if (sample_rate == kSampleRate) {
        static const Matrix fb = mel_filterbank();
        return log_mel_normalize(spec, fb);
    }
    return log_mel_normalize(spec, mel_filterbank(kMelBands, sample_rate, kFftSize, 0.0, sample_rate / 2.0));
}

}  // namespace sedkit::features
