#include "sedkit/labeling.hpp"

#include <algorithm>
#include <cmath>

namespace sedkit::labeling {

namespace {
constexpr double kGridSnap = 1e-9;
}

std::pair<long, long> covered_cells(double onset, double offset, double hop) {
    const auto first = static_cast<long>(std::floor(onset / hop + kGridSnap));
    const auto last = static_cast<long>(std::ceil(offset / hop - kGridSnap));
    return {first, std::max(first, last)};
}

FrameLabelMatrix rasterize(std::span<const EventAnnotation> events, int frames,
                           std::vector<std::string> class_names, double frame_hop) {
    FrameLabelMatrix gt;
    gt.frame_hop = frame_hop;
    gt.values = BinaryMatrix::Zero(frames, static_cast<Eigen::Index>(class_names.size()));
    const double span = frames * frame_hop;
    for (const auto& ev : events) {
        const auto it = std::find(class_names.begin(), class_names.end(), ev.label);
        if (it == class_names.end()) {
            throw Error(ErrorKind::label, "unknown label '" + ev.label + "'");
        }
        if (ev.onset < 0.0 || ev.offset < 0.0) {
            throw Error(ErrorKind::domain, "negative event time");
        }
        if (ev.offset > span + kGridSnap * frame_hop) {
            throw Error(ErrorKind::domain, "event ends after the last frame");
        }
        const auto c = static_cast<Eigen::Index>(it - class_names.begin());
        const auto [first, last] = covered_cells(ev.onset, ev.offset, frame_hop);
        for (long i = first; i < std::min<long>(last, frames); ++i) {
            gt.values(i, c) = 1;
        }
    }
    gt.class_names = std::move(class_names);
    return gt;
}

SadLabelVector derive_sad(const FrameLabelMatrix& gt) {
    SadLabelVector sad;
    sad.values = BinaryVector::Zero(gt.values.rows());
    for (Eigen::Index t = 0; t < gt.values.rows(); ++t) {
        for (Eigen::Index c = 0; c < gt.values.cols(); ++c) {
            if (gt.values(t, c) != 0) {
                sad.values(t) = 1;
                break;
            }
        }
    }
    return sad;
}

}  // namespace sedkit::labeling
