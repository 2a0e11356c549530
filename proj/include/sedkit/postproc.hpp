#pragma once

#include <span>
#include <string>
#include <vector>

#include "sedkit/common.hpp"

namespace sedkit::postproc {

/// Decision threshold, strictly inside (0, 1).
class Threshold {
public:
    explicit Threshold(double value) : value_(value) {
        if (!(value > 0.0 && value < 1.0)) {
            throw Error(ErrorKind::domain, "threshold must lie in (0, 1)");
        }
    }
    double value() const { return value_; }

private:
    double value_;
};

inline const Threshold kSedThreshold{0.2};
inline const Threshold kSadThreshold{0.5};

/// out(t, c) = p_sed(t, c) * p_sad(t): the SAD vector repeated across the C
/// columns, then multiplied elementwise.
Matrix reweight(const Matrix& p_sed, const Vector& p_sad);

/// 1 where value >= threshold.
BinaryMatrix binarize(const Matrix& p, Threshold threshold);
BinaryVector binarize(const Vector& p, Threshold threshold);

/// Each maximal run of 1s over frames [i, j] in column c becomes the event
/// (i * hop, (j + 1) * hop, class_names[c]); sorted by (onset, label).
std::vector<EventAnnotation> decode_events(const BinaryMatrix& b, std::span<const std::string> class_names,
                                           double frame_hop = kFrameHop);

/// Per-column sliding median over an odd window. Not used unless requested.
BinaryMatrix median_smooth(const BinaryMatrix& b, int window);

void sort_events(std::vector<EventAnnotation>& events);

}  // namespace sedkit::postproc
