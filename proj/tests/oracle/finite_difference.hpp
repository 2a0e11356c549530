#pragma once

// Central finite-difference check of Network::backward.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "sedkit/network.hpp"

namespace oracle {

struct GradCheck {
    double max_rel_error = 0.0;
    int probed = 0;
    std::size_t worst_index = 0;
};

/// |a - n| / max(|a|, |n|, floor); the floor keeps parameters with a
/// vanishing gradient from dominating through round-off alone.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheck check_gradient(const sedkit::model::Network& net, std::vector<double> params,
                                const sedkit::Matrix& x, const sedkit::BinaryMatrix& y_sed,
                                const sedkit::BinaryVector& y_sad, sedkit::model::LossWeights w, int n_probe,
                                std::uint64_t seed, double h = 1e-4) {
    const auto analytic = net.backward(params, x, y_sed, y_sad, w).values;
    std::vector<std::size_t> idx(params.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(n_probe)));

    GradCheck out;
    for (auto i : idx) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = net.loss(params, x, y_sed, y_sad, w).joint;
        params[i] = keep - h;
        const double down = net.loss(params, x, y_sed, y_sad, w).joint;
        params[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double err = relative_error(analytic[i], numeric);
        if (err > out.max_rel_error) {
            out.max_rel_error = err;
            out.worst_index = i;
        }
        ++out.probed;
    }
    return out;
}

}  // namespace oracle
