#include "sedkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "sedkit/labeling.hpp"

namespace sedkit::metrics {

namespace {

constexpr double kTimeSlack = 1e-9;

bool sorted_by_onset(std::span<const EventAnnotation> events) {
    return std::is_sorted(events.begin(), events.end(),
                          [](const EventAnnotation& a, const EventAnnotation& b) { return a.onset < b.onset; });
}

bool matches(const EventAnnotation& ref, const EventAnnotation& sys, const EventEvalOptions& opt) {
    if (std::abs(ref.onset - sys.onset) > opt.collar) {
        return false;
    }
    if (opt.evaluate_offset) {
        const double offset_collar = std::max(opt.collar, opt.offset_length_fraction * (ref.offset - ref.onset));
        return std::abs(ref.offset - sys.offset) <= offset_collar;
    }
    return true;
}

double percent(long num, long den) { return den > 0 ? 100.0 * static_cast<double>(num) / den : 0.0; }

}  // namespace

std::string_view to_string(Mode mode) { return mode == Mode::segment ? "segment" : "event"; }

IntermediateStats segment_eval(std::span<const EventAnnotation> ref, std::span<const EventAnnotation> sys,
                               double segment_length, double file_duration) {
    if (!(segment_length > 0.0)) {
        throw Error(ErrorKind::domain, "segment length must be positive");
    }
    std::set<std::string> labels;
    for (const auto* list : {&ref, &sys}) {
        for (const auto& ev : *list) {
            if (ev.onset < 0.0 || ev.offset > file_duration + kTimeSlack || ev.offset < ev.onset) {
                throw Error(ErrorKind::domain, "event '" + ev.label + "' lies outside the file");
            }
            labels.insert(ev.label);
        }
    }
    // A trailing partial segment counts as a segment.
    const auto n_segments = static_cast<long>(std::ceil(file_duration / segment_length - kTimeSlack));
    const std::vector<std::string> classes(labels.begin(), labels.end());
    const auto roll = [&](std::span<const EventAnnotation> events) {
        BinaryMatrix r = BinaryMatrix::Zero(n_segments, static_cast<Eigen::Index>(classes.size()));
        for (const auto& ev : events) {
            const auto c = std::lower_bound(classes.begin(), classes.end(), ev.label) - classes.begin();
            const auto [first, last] = labeling::covered_cells(ev.onset, ev.offset, segment_length);
            for (long s = first; s < std::min(last, n_segments); ++s) {
                r(s, c) = 1;
            }
        }
        return r;
    };
    const BinaryMatrix r = roll(ref);
    const BinaryMatrix s = roll(sys);

    IntermediateStats st;
    st.mode = Mode::segment;
    st.resolution = segment_length;
    for (long seg = 0; seg < n_segments; ++seg) {
        long tp = 0, fp = 0, fn = 0, nref = 0, nsys = 0;
        for (Eigen::Index c = 0; c < r.cols(); ++c) {
            const bool a = r(seg, c) != 0;
            const bool b = s(seg, c) != 0;
            tp += a && b;
            fp += b && !a;
            fn += a && !b;
            nref += a;
            nsys += b;
        }
        const long subs = std::min(fn, fp);
        st.tp += tp;
        st.fp += fp;
        st.fn += fn;
        st.substitutions += subs;
        st.deletions += fn - subs;
        st.insertions += fp - subs;
        st.n_ref += nref;
        st.n_sys += nsys;
    }
    return st;
}

IntermediateStats event_eval(std::span<const EventAnnotation> ref, std::span<const EventAnnotation> sys,
                             const EventEvalOptions& options) {
    if (!sorted_by_onset(ref) || !sorted_by_onset(sys)) {
        throw Error(ErrorKind::contract, "event lists must be sorted by onset");
    }
    std::vector<bool> ref_used(ref.size(), false);
    std::vector<bool> sys_used(sys.size(), false);

    long tp = 0;
    for (std::size_t j = 0; j < sys.size(); ++j) {
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (!ref_used[i] && ref[i].label == sys[j].label && matches(ref[i], sys[j], options)) {
                ref_used[i] = true;
                sys_used[j] = true;
                ++tp;
                break;
            }
        }
    }

    long subs = 0;
    for (std::size_t j = 0; j < sys.size(); ++j) {
        if (sys_used[j]) continue;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (!ref_used[i] && ref[i].label != sys[j].label && matches(ref[i], sys[j], options)) {
                ref_used[i] = true;
                sys_used[j] = true;
                ++subs;
                break;
            }
        }
    }

    IntermediateStats st;
    st.mode = Mode::event;
    st.resolution = options.collar;
    st.tp = tp;
    st.n_ref = static_cast<long>(ref.size());
    st.n_sys = static_cast<long>(sys.size());
    st.fn = st.n_ref - tp;
    st.fp = st.n_sys - tp;
    st.substitutions = subs;
    st.deletions = st.fn - subs;
    st.insertions = st.fp - subs;
    return st;
}

MetricReport micro_aggregate(std::span<const IntermediateStats> stats) {
    MetricReport rep;
    if (stats.empty()) {
        return rep;
    }
    rep.mode = stats.front().mode;
    rep.resolution = stats.front().resolution;
    IntermediateStats& tot = rep.stats;
    tot.mode = rep.mode;
    tot.resolution = rep.resolution;
    for (const auto& s : stats) {
        if (s.mode != rep.mode) {
            throw Error(ErrorKind::contract, "cannot aggregate segment and event statistics together");
        }
        tot.tp += s.tp;
        tot.fp += s.fp;
        tot.fn += s.fn;
        tot.substitutions += s.substitutions;
        tot.deletions += s.deletions;
        tot.insertions += s.insertions;
        tot.n_ref += s.n_ref;
        tot.n_sys += s.n_sys;
    }
    rep.precision = percent(tot.tp, tot.tp + tot.fp);
    rep.recall = percent(tot.tp, tot.tp + tot.fn);
    rep.f1 = percent(2 * tot.tp, 2 * tot.tp + tot.fp + tot.fn);
    const long errors = tot.substitutions + tot.deletions + tot.insertions;
    // With no reference activity the error count itself is reported.
    rep.error_rate = static_cast<double>(errors) / static_cast<double>(std::max(tot.n_ref, 1L));
    return rep;
}

MetricReport evaluate_files(std::span<const std::vector<EventAnnotation>> refs,
                            std::span<const std::vector<EventAnnotation>> sys, Mode mode, double file_duration) {
    if (refs.size() != sys.size()) {
        throw Error(ErrorKind::dimension, "reference and system file counts differ");
    }
    std::vector<IntermediateStats> per_file;
    per_file.reserve(refs.size());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        per_file.push_back(mode == Mode::segment ? segment_eval(refs[i], sys[i], kSegmentLength, file_duration)
                                                 : event_eval(refs[i], sys[i]));
    }
    auto rep = micro_aggregate(per_file);
    if (per_file.empty()) {
        rep.mode = mode;
        rep.stats.mode = mode;
        rep.resolution = rep.stats.resolution = mode == Mode::segment ? kSegmentLength : kOnsetCollar;
    }
    return rep;
}

nlohmann::json to_json(const MetricReport& r) {
    const auto& s = r.stats;
    return nlohmann::json{
        {"mode", std::string(to_string(r.mode))},
        {r.mode == Mode::segment ? "segment_length" : "collar", r.resolution},
        {"f1", r.f1},
        {"precision", r.precision},
        {"recall", r.recall},
        {"error_rate", r.error_rate},
        {"stats",
         {{"tp", s.tp},
          {"fp", s.fp},
          {"fn", s.fn},
          {"substitutions", s.substitutions},
          {"deletions", s.deletions},
          {"insertions", s.insertions},
          {"n_ref", s.n_ref},
          {"n_sys", s.n_sys}}}};
}

std::string format_report(const MetricReport& r) {
    char buf[512];
    const auto& s = r.stats;
    std::snprintf(buf, sizeof(buf),
                  "%-8s  F1 %6.2f %%  P %6.2f %%  R %6.2f %%  ER %6.3f\n"
                  "          tp %ld  fp %ld  fn %ld  S %ld  D %ld  I %ld  Nref %ld  Nsys %ld\n",
                  std::string(to_string(r.mode)).c_str(), r.f1, r.precision, r.recall, r.error_rate, s.tp, s.fp, s.fn,
                  s.substitutions, s.deletions, s.insertions, s.n_ref, s.n_sys);
    return buf;
}

}  // namespace sedkit::metrics
