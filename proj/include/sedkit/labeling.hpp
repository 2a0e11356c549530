#pragma once

#include <span>
#include <string>
#include <vector>

#include "sedkit/common.hpp"

namespace sedkit::labeling {

/// Strong frame targets, T x C.
struct FrameLabelMatrix {
    BinaryMatrix values;
    double frame_hop = kFrameHop;
    std::vector<std::string> class_names;

    int frames() const { return static_cast<int>(values.rows()); }
    int classes() const { return static_cast<int>(values.cols()); }
};

/// Class-agnostic activity targets, length T.
struct SadLabelVector {
    BinaryVector values;
};

/// Frame i of class c is active iff an event of class c overlaps
/// [i * hop, (i + 1) * hop) with nonzero length.
FrameLabelMatrix rasterize(std::span<const EventAnnotation> events, int frames,
                           std::vector<std::string> class_names, double frame_hop = kFrameHop);

/// OR over classes, per frame.
SadLabelVector derive_sad(const FrameLabelMatrix& gt);

/// Half-open frame range [first, last) touched by [onset, offset) on a grid
/// of step `hop`. Boundaries within 1e-9 steps of a grid line snap to it.
std::pair<long, long> covered_cells(double onset, double offset, double hop);

}  // namespace sedkit::labeling
