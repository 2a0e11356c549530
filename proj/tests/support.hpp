#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sedkit/common.hpp"
#include "sedkit/postproc.hpp"

namespace testing_support {

using sedkit::EventAnnotation;

inline double round_to(double x, double step) { return std::round(x / step) * step; }

/// Up to `max_events` events over `labels`, times on a 10 ms grid inside [0, duration].
inline std::vector<EventAnnotation> random_events(std::mt19937_64& rng, int max_events, int n_labels,
                                                  double duration = 10.0) {
    std::uniform_int_distribution<int> count(0, max_events);
    std::uniform_int_distribution<int> label(0, n_labels - 1);
    std::uniform_real_distribution<double> onset(0.0, duration - 0.1);
    std::uniform_real_distribution<double> length(0.05, 3.0);
    std::vector<EventAnnotation> out;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
        EventAnnotation e;
        e.onset = round_to(onset(rng), 0.01);
        e.offset = std::min(duration, round_to(e.onset + length(rng), 0.01));
        if (e.offset <= e.onset) e.offset = e.onset + 0.01;
        e.label = std::string(1, static_cast<char>('a' + label(rng)));
        out.push_back(e);
    }
    sedkit::postproc::sort_events(out);
    return out;
}

/// A noisy copy of `ref`: jittered onsets, occasional label swaps, drops and inserts.
inline std::vector<EventAnnotation> perturb(const std::vector<EventAnnotation>& ref, std::mt19937_64& rng,
                                            int n_labels, double duration = 10.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> jitter(-0.4, 0.4);
    std::uniform_int_distribution<int> label(0, n_labels - 1);
    std::vector<EventAnnotation> out;
    for (const auto& e : ref) {
        if (u(rng) < 0.2) continue;
        EventAnnotation s = e;
        const double len = e.offset - e.onset;
        s.onset = std::clamp(round_to(e.onset + jitter(rng), 0.01), 0.0, duration - 0.05);
        s.offset = std::min(duration, round_to(s.onset + len, 0.01));
        if (s.offset <= s.onset) s.offset = s.onset + 0.01;
        if (u(rng) < 0.25) s.label = std::string(1, static_cast<char>('a' + label(rng)));
        out.push_back(s);
    }
    auto extra = random_events(rng, 2, n_labels, duration);
    out.insert(out.end(), extra.begin(), extra.end());
    sedkit::postproc::sort_events(out);
    return out;
}

inline sedkit::BinaryMatrix random_binary(std::mt19937_64& rng, int rows, int cols, double p = 0.3) {
    std::bernoulli_distribution b(p);
    sedkit::BinaryMatrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = b(rng) ? 1 : 0;
    }
    return m;
}

inline sedkit::Matrix random_probs(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sedkit::Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = u(rng);
    }
    return m;
}

inline std::vector<std::string> class_names(int n) {
    std::vector<std::string> out;
    for (int c = 0; c < n; ++c) out.push_back("class" + std::to_string(c));
    return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("sedkit_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
