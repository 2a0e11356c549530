#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "sedkit/synthscape.hpp"

using namespace sedkit;
using namespace sedkit::synth;

namespace {

// Welch estimate with a Hann window, non-overlapping segments.
std::vector<double> averaged_periodogram(const std::vector<double>& x, int seg) {
    Eigen::FFT<double> fft;
    std::vector<double> acc(static_cast<std::size_t>(seg / 2 + 1), 0.0);
    std::vector<double> frame(static_cast<std::size_t>(seg));
    std::vector<std::complex<double>> spec;
    int count = 0;
    for (std::size_t start = 0; start + seg <= x.size(); start += seg, ++count) {
        for (int i = 0; i < seg; ++i) {
            const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / seg);
            frame[static_cast<std::size_t>(i)] = w * x[start + static_cast<std::size_t>(i)];
        }
        fft.fwd(spec, frame);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::norm(spec[k]);
    }
    for (auto& v : acc) v /= count;
    return acc;
}

int spectral_peak_bin(const std::vector<double>& x) {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, x);
    int best = 1;
    for (int k = 1; k < static_cast<int>(x.size() / 2); ++k) {
        if (std::abs(spec[static_cast<std::size_t>(k)]) > std::abs(spec[static_cast<std::size_t>(best)])) best = k;
    }
    return best;
}

double peak_abs(const std::vector<double>& x) {
    double p = 0.0;
    for (double v : x) p = std::max(p, std::abs(v));
    return p;
}

}  // namespace

TEST(Brownian, PeakIsExactlyOne) {
    for (std::uint64_t seed : {1U, 7U, 99U}) {
        EXPECT_EQ(peak_abs(gen_brownian_noise(10000, seed)), 1.0);
    }
}

TEST(Brownian, SeededDeterminism) {
    EXPECT_EQ(gen_brownian_noise(441000, 7), gen_brownian_noise(441000, 7));
    EXPECT_NE(gen_brownian_noise(1000, 7), gen_brownian_noise(1000, 8));
}

TEST(Brownian, ZeroLengthIsEmptyInputError) {
    try {
        gen_brownian_noise(0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::empty_input);
    }
}

TEST(Brownian, PowerSlopeIsMinusTwo) {
    const int seg = 8192;
    const auto x = gen_brownian_noise(441000, 7);
    const auto p = averaged_periodogram(x, seg);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double f = static_cast<double>(k) * kSampleRate / seg;
        if (f < 50.0 || f > 5000.0) continue;
        const double lx = std::log10(f);
        const double ly = std::log10(p[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    EXPECT_NEAR(slope, -2.0, 0.5);
}

TEST(RenderEvent, ToneSpectralPeak) {
    EventClassSpec spec = default_classes()[0];
    ASSERT_EQ(spec.kind, GeneratorKind::tone);
    spec.freq_hz = {1000.0, 1000.0};
    const auto x = render_event(spec, 1.0, 3);
    ASSERT_EQ(x.size(), 44100U);
    // 1 Hz bins over a 1 s clip
    EXPECT_NEAR(spectral_peak_bin(x), 1000, 1);
}

TEST(RenderEvent, FadesPeakAndDeterminism) {
    for (const auto& spec : default_classes()) {
        const double d = 0.5 * (spec.duration.min + spec.duration.max);
        const auto x = render_event(spec, d, 42);
        ASSERT_FALSE(x.empty());
        EXPECT_LT(std::abs(x.front()), 0.01) << spec.name;
        EXPECT_LT(std::abs(x.back()), 0.01) << spec.name;
        EXPECT_LE(peak_abs(x), 1.0) << spec.name;
        EXPECT_GT(peak_abs(x), 0.5) << spec.name;
        EXPECT_EQ(x, render_event(spec, d, 42)) << spec.name;
    }
}

TEST(RenderEvent, DurationOutsideRangeIsDomainError) {
    const auto spec = default_classes()[0];
    try {
        render_event(spec, spec.duration.max + 1.0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
}

TEST(SampleSpec, RangesAndCoverage) {
    const auto cfg = default_dataset_config();
    std::vector<int> seen(10, 0);
    int polyphonic = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto spec = sample_spec(cfg, s);
        const int n = static_cast<int>(spec.placements.size());
        ASSERT_GE(n, 1);
        ASSERT_LE(n, 9);
        ++seen[static_cast<std::size_t>(n)];
        for (const auto& p : spec.placements) {
            EXPECT_GE(p.onset, 0.0);
            EXPECT_LE(p.onset + p.duration, 10.0 + 1e-9);
            const auto& cls = cfg.classes[static_cast<std::size_t>(p.class_id)];
            EXPECT_GE(p.duration, cls.duration.min);
            EXPECT_LE(p.duration, cls.duration.max);
            EXPECT_GE(p.gain, cls.gain.min);
            EXPECT_LE(p.gain, cls.gain.max);
        }
        if (max_polyphony(spec) > 1) ++polyphonic;
    }
    for (int n = 1; n <= 9; ++n) EXPECT_GT(seen[static_cast<std::size_t>(n)], 0) << n;
    EXPECT_GT(polyphonic, 500);
}

TEST(SampleSpec, Deterministic) {
    const auto cfg = default_dataset_config();
    const auto a = sample_spec(cfg, 5);
    const auto b = sample_spec(cfg, 5);
    ASSERT_EQ(a.placements.size(), b.placements.size());
    for (std::size_t i = 0; i < a.placements.size(); ++i) {
        EXPECT_EQ(a.placements[i].onset, b.placements[i].onset);
        EXPECT_EQ(a.placements[i].class_id, b.placements[i].class_id);
        EXPECT_EQ(a.placements[i].gain, b.placements[i].gain);
    }
}

TEST(SampleSpec, InfeasibleConfigIsConfigError) {
    auto cfg = default_dataset_config();
    cfg.classes[1].duration = {2.0, 12.0};
    try {
        sample_spec(cfg, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
    }
    cfg = default_dataset_config();
    cfg.classes[2].name = cfg.classes[0].name;
    EXPECT_THROW(validate(cfg), Error);
}

TEST(MaxPolyphony, SweepLine) {
    SoundscapeSpec spec;
    spec.placements = {{0, 0.0, 2.0, 0.5}, {1, 1.0, 2.0, 0.5}, {2, 1.5, 0.2, 0.5}, {3, 3.0, 1.0, 0.5}};
    EXPECT_EQ(max_polyphony(spec), 3);
    // back-to-back events do not overlap
    spec.placements = {{0, 0.0, 1.0, 0.5}, {1, 1.0, 1.0, 0.5}};
    EXPECT_EQ(max_polyphony(spec), 1);
}

TEST(Compose, ZeroGainEventsLeaveScaledBackground) {
    auto spec = sample_spec(default_dataset_config(), 3);
    for (auto& p : spec.placements) p.gain = 0.0;
    const auto scape = compose(spec, default_classes());
    const auto bg = gen_brownian_noise(441000, mix_seed(spec.seed, 0xB40));
    ASSERT_EQ(scape.audio.samples.size(), bg.size());
    for (std::size_t i = 0; i < bg.size(); i += 97) {
        ASSERT_DOUBLE_EQ(scape.audio.samples[i], spec.background_gain * bg[i]);
    }
}

TEST(Compose, AnnotationsMirrorPlacements) {
    const auto classes = default_classes();
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto spec = sample_spec(default_dataset_config(), s);
        const auto scape = compose(spec, classes);
        ASSERT_EQ(scape.events.size(), spec.placements.size());
        for (std::size_t i = 0; i < spec.placements.size(); ++i) {
            const auto& p = spec.placements[i];
            EXPECT_EQ(scape.events[i].onset, p.onset);
            EXPECT_EQ(scape.events[i].offset, p.onset + p.duration);
            EXPECT_EQ(scape.events[i].label, classes[static_cast<std::size_t>(p.class_id)].name);
            EXPECT_GE(scape.events[i].onset, 0.0);
            EXPECT_LT(scape.events[i].onset, scape.events[i].offset);
            EXPECT_LE(scape.events[i].offset, 10.0 + 1e-9);
        }
        EXPECT_EQ(scape.audio.samples.size(), 441000U);
        EXPECT_LE(peak_abs(scape.audio.samples), 1.0);
    }
}

TEST(Compose, RemovingAnEventOnlyChangesItsSupport) {
    const auto classes = default_classes();
    auto spec = sample_spec(default_dataset_config(), 11);
    ASSERT_GE(spec.placements.size(), 2U);
    spec.background_gain = 0.1;
    for (auto& p : spec.placements) p.gain = 0.05;
    const auto full = compose(spec, classes);
    ASSERT_LT(peak_abs(full.audio.samples), 1.0);

    const auto removed = spec.placements[1];
    auto reduced_spec = spec;
    reduced_spec.placements.erase(reduced_spec.placements.begin() + 1);
    const auto reduced = compose(reduced_spec, classes);

    const double eps = 0.010;
    int changed = 0;
    for (std::size_t i = 0; i < full.audio.samples.size(); ++i) {
        if (full.audio.samples[i] == reduced.audio.samples[i]) continue;
        ++changed;
        const double t = static_cast<double>(i) / kSampleRate;
        EXPECT_GE(t, removed.onset - eps);
        EXPECT_LE(t, removed.onset + removed.duration + eps);
    }
    EXPECT_GT(changed, 0);
}

TEST(Compose, UnknownClassIsLookupError) {
    auto spec = sample_spec(default_dataset_config(), 1);
    spec.placements[0].class_id = 17;
    try {
        compose(spec, default_classes());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::lookup);
    }
}

TEST(Compose, LoudMixesAreRescaledIntoRange) {
    auto spec = sample_spec(default_dataset_config(), 2);
    spec.background_gain = 0.9;
    for (auto& p : spec.placements) p.gain = 1.0;
    const auto scape = compose(spec, default_classes());
    EXPECT_LE(peak_abs(scape.audio.samples), 1.0);
}

TEST(DatasetConfig, JsonRoundTrip) {
    auto cfg = default_dataset_config();
    cfg.n_train = 12;
    cfg.master_seed = 77;
    const nlohmann::json j = cfg;
    const auto back = j.get<DatasetConfig>();
    EXPECT_EQ(back.n_train, 12);
    EXPECT_EQ(back.master_seed, 77U);
    ASSERT_EQ(back.classes.size(), cfg.classes.size());
    for (std::size_t i = 0; i < cfg.classes.size(); ++i) {
        EXPECT_EQ(back.classes[i].name, cfg.classes[i].name);
        EXPECT_EQ(back.classes[i].kind, cfg.classes[i].kind);
        EXPECT_EQ(back.classes[i].duration.max, cfg.classes[i].duration.max);
    }
}
