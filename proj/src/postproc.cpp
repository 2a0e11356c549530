#include "sedkit/postproc.hpp"

#include <algorithm>

namespace sedkit::postproc {

Matrix reweight(const Matrix& p_sed, const Vector& p_sad) {
    if (p_sed.rows() != p_sad.size()) {
        throw Error(ErrorKind::dimension, "SED posteriogram has " + std::to_string(p_sed.rows()) +
                                              " frames, SAD vector has " + std::to_string(p_sad.size()));
    }
    return p_sad.asDiagonal() * p_sed;
}

BinaryMatrix binarize(const Matrix& p, Threshold threshold) {
    return (p.array() >= threshold.value()).cast<std::uint8_t>().matrix();
}

BinaryVector binarize(const Vector& p, Threshold threshold) {
    return (p.array() >= threshold.value()).cast<std::uint8_t>().matrix();
}

void sort_events(std::vector<EventAnnotation>& events) {
    std::stable_sort(events.begin(), events.end(), [](const EventAnnotation& a, const EventAnnotation& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        return a.label < b.label;
    });
}

std::vector<EventAnnotation> decode_events(const BinaryMatrix& b, std::span<const std::string> class_names,
                                           double frame_hop) {
    if (static_cast<std::size_t>(b.cols()) != class_names.size()) {
        throw Error(ErrorKind::dimension, "binary matrix columns do not match class names");
    }
    std::vector<EventAnnotation> events;
    const Eigen::Index frames = b.rows();
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
        Eigen::Index t = 0;
        while (t < frames) {
            if (b(t, c) == 0) {
                ++t;
                continue;
            }
            const Eigen::Index start = t;
            while (t < frames && b(t, c) != 0) ++t;
            events.push_back({static_cast<double>(start) * frame_hop, static_cast<double>(t) * frame_hop,
                              class_names[static_cast<std::size_t>(c)]});
        }
    }
    sort_events(events);
    return events;
}

BinaryMatrix median_smooth(const BinaryMatrix& b, int window) {
    if (window < 1 || window % 2 == 0) {
        throw Error(ErrorKind::domain, "median window must be a positive odd number");
    }
    const int half = window / 2;
    BinaryMatrix out = b;
    for (Eigen::Index c = 0; c < b.cols(); ++c) {
        for (Eigen::Index t = 0; t < b.rows(); ++t) {
            int on = 0;
            int n = 0;
            for (Eigen::Index k = std::max<Eigen::Index>(0, t - half);
                 k <= std::min<Eigen::Index>(b.rows() - 1, t + half); ++k) {
                on += b(k, c);
                ++n;
            }
            out(t, c) = 2 * on > n ? 1 : 0;
        }
    }
    return out;
}

}  // namespace sedkit::postproc
