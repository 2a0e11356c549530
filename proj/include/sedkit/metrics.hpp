#pragma once

// Segment-based and event-based detection metrics, micro-averaged.
//
// Both modes reduce one (reference, system) file pair to IntermediateStats;
// micro_aggregate sums the counts over files before forming P, R, F1 and ER.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedkit/common.hpp"

namespace sedkit::metrics {

enum class Mode { segment, event };

std::string_view to_string(Mode mode);

struct IntermediateStats {
    Mode mode = Mode::segment;
    double resolution = 1.0;  // segment length or onset collar, seconds
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long substitutions = 0;
    long deletions = 0;
    long insertions = 0;
    long n_ref = 0;
    long n_sys = 0;

    bool operator==(const IntermediateStats&) const = default;
};

struct MetricReport {
    Mode mode = Mode::segment;
    double resolution = 1.0;
    double f1 = 0.0;         // percent
    double precision = 0.0;  // percent
    double recall = 0.0;     // percent
    double error_rate = 0.0;
    IntermediateStats stats;
};

struct EventEvalOptions {
    double collar = 0.25;
    bool evaluate_offset = false;
    double offset_length_fraction = 0.5;
};

inline constexpr double kSegmentLength = 1.0;
inline constexpr double kOnsetCollar = 0.25;

IntermediateStats segment_eval(std::span<const EventAnnotation> ref, std::span<const EventAnnotation> sys,
                               double segment_length = kSegmentLength, double file_duration = kSceneDuration);

/// Greedy onset-order matching. Both lists must be sorted by onset.
IntermediateStats event_eval(std::span<const EventAnnotation> ref, std::span<const EventAnnotation> sys,
                             const EventEvalOptions& options = {});

MetricReport micro_aggregate(std::span<const IntermediateStats> stats);

/// Score a list of files (parallel ref/sys lists) in one mode.
MetricReport evaluate_files(std::span<const std::vector<EventAnnotation>> refs,
                            std::span<const std::vector<EventAnnotation>> sys, Mode mode,
                            double file_duration = kSceneDuration);

nlohmann::json to_json(const MetricReport& report);
std::string format_report(const MetricReport& report);

}  // namespace sedkit::metrics
