#include "sedkit/synthscape.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace sedkit::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFadeSeconds = 0.010;
constexpr double kRangeSlack = 1e-9;

double uniform(std::mt19937_64& rng, Range r) {
    if (r.max <= r.min) {
        return r.min;
    }
    return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

double log_uniform(std::mt19937_64& rng, Range r) {
    if (r.max <= r.min) {
        return r.min;
    }
    return std::exp(std::uniform_real_distribution<double>(std::log(r.min), std::log(r.max))(rng));
}

// RBJ constant-peak band-pass biquad, direct form I.
class BandPass {
public:
    BandPass(double center_hz, double q, int sample_rate) {
        const double w0 = kTwoPi * center_hz / sample_rate;
        const double alpha = std::sin(w0) / (2.0 * q);
        const double a0 = 1.0 + alpha;
        b0_ = alpha / a0;
        b2_ = -alpha / a0;
        a1_ = -2.0 * std::cos(w0) / a0;
        a2_ = (1.0 - alpha) / a0;
    }

    double operator()(double x) {
        const double y = b0_ * x + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
        x2_ = x1_;
        x1_ = x;
        y2_ = y1_;
        y1_ = y;
        return y;
    }

private:
    double b0_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
    double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

std::vector<double> band_noise(std::size_t n, double center_hz, double q, int sr, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    BandPass filter(center_hz, q, sr);
    std::vector<double> out(n);
    for (auto& v : out) {
        v = filter(gauss(rng));
    }
    return out;
}

void render_tone(std::vector<double>& x, const EventClassSpec& spec, int sr, std::mt19937_64& rng) {
    const double f0 = log_uniform(rng, spec.freq_hz);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    for (int k = 1; k <= 4; ++k) {
        const double fk = f0 * k;
        const double phi = phase(rng);
        if (fk >= 0.45 * sr) {
            break;
        }
        const double amp = 1.0 / k;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += amp * std::sin(kTwoPi * fk * static_cast<double>(i) / sr + phi);
        }
    }
}

void render_chirp(std::vector<double>& x, const EventClassSpec& spec, int sr, std::mt19937_64& rng) {
    const double f_start = log_uniform(rng, spec.freq_hz);
    const double f_end = log_uniform(rng, spec.freq_hz);
    double phase = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
    // exponential sweep: the instantaneous frequency grows by a constant factor per sample
    const double step = std::pow(f_end / f_start, 1.0 / static_cast<double>(x.size()));
    double f = f_start;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::sin(phase) + 0.3 * std::sin(2.0 * phase);
        phase += kTwoPi * f / sr;
        f *= step;
    }
}

void render_noise_burst(std::vector<double>& x, const EventClassSpec& spec, int sr, std::mt19937_64& rng) {
    const double fc = log_uniform(rng, spec.freq_hz);
    const double rate = uniform(rng, spec.rate_hz);
    const auto carrier = band_noise(x.size(), fc, 2.0, sr, rng);
    const double period = 1.0 / rate;
    const double decay = 0.3 * period;
    std::uniform_real_distribution<double> jitter(0.0, 0.25 * period);
    double t_burst = 0.0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / sr;
        if (i == next) {
            t_burst = t;
            next = static_cast<std::size_t>(std::llround((t + period + jitter(rng)) * sr));
        }
        x[i] = carrier[i] * std::exp(-(t - t_burst) / decay);
    }
}

void render_impulse_train(std::vector<double>& x, const EventClassSpec& spec, int sr, std::mt19937_64& rng) {
    const double fc = log_uniform(rng, spec.freq_hz);
    const double rate = uniform(rng, spec.rate_hz);
    const double tau = 0.004;
    const auto period = static_cast<std::size_t>(std::max(1.0, std::round(sr / rate)));
    std::normal_distribution<double> gauss(0.0, 0.2);
    for (std::size_t start = 0; start < x.size(); start += period) {
        const std::size_t len = std::min(x.size() - start, period);
        for (std::size_t k = 0; k < len; ++k) {
            const double t = static_cast<double>(k) / sr;
            x[start + k] = std::exp(-t / tau) * (std::sin(kTwoPi * fc * t) + gauss(rng));
        }
    }
}

void render_am_noise(std::vector<double>& x, const EventClassSpec& spec, int sr, std::mt19937_64& rng) {
    const double fc = log_uniform(rng, spec.freq_hz);
    const double fm = uniform(rng, spec.rate_hz);
    const double phi = std::uniform_real_distribution<double>(0.0, kTwoPi)(rng);
    const auto carrier = band_noise(x.size(), fc, 1.5, sr, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / sr;
        x[i] = carrier[i] * 0.5 * (1.0 + std::sin(kTwoPi * fm * t + phi));
    }
}

std::uint64_t placement_seed(std::uint64_t scape_seed, const Placement& p) {
    std::uint64_t s = mix_seed(scape_seed, static_cast<std::uint64_t>(p.class_id) + 17);
    s = mix_seed(s, std::bit_cast<std::uint64_t>(p.onset));
    return mix_seed(s, std::bit_cast<std::uint64_t>(p.duration));
}

}  // namespace

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::tone: return "tone";
        case GeneratorKind::chirp: return "chirp";
        case GeneratorKind::noise_burst: return "noise_burst";
        case GeneratorKind::impulse_train: return "impulse_train";
        case GeneratorKind::am_noise: return "am_noise";
    }
    return "tone";
}

GeneratorKind generator_kind_from_string(std::string_view name) {
    for (auto k : {GeneratorKind::tone, GeneratorKind::chirp, GeneratorKind::noise_burst,
                   GeneratorKind::impulse_train, GeneratorKind::am_noise}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw Error(ErrorKind::config, "unknown generator kind '" + std::string(name) + "'");
}

std::vector<EventClassSpec> default_classes() {
    return {
        {0, "car_horn", GeneratorKind::tone, {0.4, 2.5}, {0.02, 0.5}, {250.0, 3000.0}, {0.0, 0.0}},
        {1, "siren", GeneratorKind::chirp, {1.0, 4.0}, {0.02, 0.5}, {250.0, 3000.0}, {0.0, 0.0}},
        {2, "dog_bark", GeneratorKind::noise_burst, {0.4, 2.5}, {0.02, 0.5}, {250.0, 3000.0}, {2.0, 5.0}},
        {3, "jackhammer", GeneratorKind::impulse_train, {0.5, 3.0}, {0.02, 0.5}, {250.0, 3000.0}, {8.0, 20.0}},
        {4, "engine_idling", GeneratorKind::am_noise, {1.0, 4.0}, {0.02, 0.5}, {250.0, 3000.0}, {4.0, 12.0}},
    };
}

DatasetConfig default_dataset_config() {
    DatasetConfig cfg;
    cfg.classes = default_classes();
    return cfg;
}

void validate(const EventClassSpec& spec, double scene_duration) {
    const auto fail = [&](const std::string& msg) {
        throw Error(ErrorKind::config, "class '" + spec.name + "': " + msg);
    };
    if (spec.name.empty()) fail("empty name");
    if (!(spec.duration.min > 0.0)) fail("duration min must be > 0");
    if (spec.duration.max < spec.duration.min) fail("duration range inverted");
    if (spec.duration.max > scene_duration) fail("duration max exceeds scene duration");
    if (!(spec.gain.min > 0.0) || spec.gain.max > 1.0 || spec.gain.max < spec.gain.min) {
        fail("gain range must lie within (0, 1]");
    }
    if (!(spec.freq_hz.min > 0.0) || spec.freq_hz.max < spec.freq_hz.min) fail("bad frequency range");
    const bool needs_rate = spec.kind == GeneratorKind::noise_burst || spec.kind == GeneratorKind::impulse_train ||
                            spec.kind == GeneratorKind::am_noise;
    if (needs_rate && (!(spec.rate_hz.min > 0.0) || spec.rate_hz.max < spec.rate_hz.min)) fail("bad rate range");
}

void validate(const DatasetConfig& config) {
    if (config.classes.empty()) {
        throw Error(ErrorKind::config, "dataset config defines no event classes");
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < config.classes.size(); ++i) {
        const auto& c = config.classes[i];
        validate(c);
        if (c.class_id != static_cast<int>(i)) {
            throw Error(ErrorKind::config, "class ids must equal their position");
        }
        if (!names.insert(c.name).second) {
            throw Error(ErrorKind::config, "duplicate class name '" + c.name + "'");
        }
    }
    if (config.min_events < 1 || config.max_events > 9 || config.min_events > config.max_events) {
        throw Error(ErrorKind::config, "event count range must lie within [1, 9]");
    }
    if (config.n_train < 0 || config.n_val < 0 || config.n_test < 0) {
        throw Error(ErrorKind::config, "negative split size");
    }
    if (config.background_gain.min < 0.0 || config.background_gain.max < config.background_gain.min) {
        throw Error(ErrorKind::config, "bad background gain range");
    }
}

std::vector<std::string> class_names(const DatasetConfig& config) {
    std::vector<std::string> names;
    names.reserve(config.classes.size());
    for (const auto& c : config.classes) {
        names.push_back(c.name);
    }
    return names;
}

std::vector<double> gen_brownian_noise(std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) {
        throw Error(ErrorKind::empty_input, "brownian noise needs at least one sample");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(n_samples);
    double acc = 0.0;
    for (auto& v : x) {
        acc += gauss(rng);
        v = acc;
    }
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n_samples);
    double peak = 0.0;
    for (auto& v : x) {
        v -= mean;
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.0) {
        for (auto& v : x) v /= peak;
    }
    return x;
}

std::vector<double> render_event(const EventClassSpec& spec, double duration, std::uint64_t seed,
                                 int sample_rate) {
    if (duration < spec.duration.min - kRangeSlack || duration > spec.duration.max + kRangeSlack) {
        throw Error(ErrorKind::domain, "event duration outside the range of class '" + spec.name + "'");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    std::vector<double> x(n, 0.0);
    if (n == 0) {
        return x;
    }
    std::mt19937_64 rng(seed);
    switch (spec.kind) {
        case GeneratorKind::tone: render_tone(x, spec, sample_rate, rng); break;
        case GeneratorKind::chirp: render_chirp(x, spec, sample_rate, rng); break;
        case GeneratorKind::noise_burst: render_noise_burst(x, spec, sample_rate, rng); break;
        case GeneratorKind::impulse_train: render_impulse_train(x, spec, sample_rate, rng); break;
        case GeneratorKind::am_noise: render_am_noise(x, spec, sample_rate, rng); break;
    }

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) {
        for (auto& v : x) v /= peak;
    }

    const auto fade = std::min<std::size_t>(static_cast<std::size_t>(std::llround(kFadeSeconds * sample_rate)), n / 2);
    for (std::size_t i = 0; i < fade; ++i) {
        const double g = static_cast<double>(i) / static_cast<double>(fade);
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
    return x;
}

SoundscapeSpec sample_spec(const DatasetConfig& config, std::uint64_t seed) {
    validate(config);
    std::mt19937_64 rng(seed);
    SoundscapeSpec spec;
    spec.seed = seed;
    const int count = std::uniform_int_distribution<int>(config.min_events, config.max_events)(rng);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(config.classes.size()) - 1);
    for (int i = 0; i < count; ++i) {
        const auto& cls = config.classes[static_cast<std::size_t>(pick(rng))];
        Placement p;
        p.class_id = cls.class_id;
        p.duration = uniform(rng, cls.duration);
        p.onset = uniform(rng, {0.0, spec.duration - p.duration});
        p.gain = uniform(rng, cls.gain);
        spec.placements.push_back(p);
    }
    spec.background_gain = uniform(rng, config.background_gain);
    std::stable_sort(spec.placements.begin(), spec.placements.end(),
                     [](const Placement& a, const Placement& b) { return a.onset < b.onset; });
    return spec;
}

Soundscape compose(const SoundscapeSpec& spec, std::span<const EventClassSpec> classes) {
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * spec.sample_rate));
    Soundscape out;
    out.audio.sample_rate = spec.sample_rate;
    out.audio.samples = gen_brownian_noise(n, mix_seed(spec.seed, 0xB40));
    for (auto& v : out.audio.samples) {
        v *= spec.background_gain;
    }

    for (const auto& p : spec.placements) {
        const auto it = std::find_if(classes.begin(), classes.end(),
                                     [&](const EventClassSpec& c) { return c.class_id == p.class_id; });
        if (it == classes.end()) {
            throw Error(ErrorKind::lookup, "unknown class id " + std::to_string(p.class_id));
        }
        if (p.onset < 0.0 || p.duration <= 0.0 || p.onset + p.duration > spec.duration + kRangeSlack) {
            throw Error(ErrorKind::domain, "placement does not fit inside the soundscape");
        }
        const auto event = render_event(*it, p.duration, placement_seed(spec.seed, p), spec.sample_rate);
        const auto start = static_cast<std::size_t>(std::llround(p.onset * spec.sample_rate));
        for (std::size_t i = 0; i < event.size() && start + i < n; ++i) {
            out.audio.samples[start + i] += p.gain * event[i];
        }
        out.events.push_back({p.onset, p.onset + p.duration, it->name});
    }

    double peak = 0.0;
    for (double v : out.audio.samples) peak = std::max(peak, std::abs(v));
    if (peak > 1.0) {
        for (auto& v : out.audio.samples) v /= peak;
    }
    return out;
}

std::uint64_t scape_seed(std::uint64_t master_seed, int split, int index) {
    return mix_seed(mix_seed(master_seed, static_cast<std::uint64_t>(split) + 101),
                    static_cast<std::uint64_t>(index));
}

int max_polyphony(const SoundscapeSpec& spec) {
    // Sweep line: offsets sort before onsets at equal times (half-open intervals).
    std::vector<std::pair<double, int>> edges;
    for (const auto& p : spec.placements) {
        edges.emplace_back(p.onset, +1);
        edges.emplace_back(p.onset + p.duration, -1);
    }
    std::sort(edges.begin(), edges.end());
    int level = 0;
    int best = 0;
    for (const auto& [t, d] : edges) {
        level += d;
        best = std::max(best, level);
    }
    return best;
}

void to_json(nlohmann::json& j, const EventClassSpec& spec) {
    j = nlohmann::json{{"class_id", spec.class_id},
                       {"name", spec.name},
                       {"generator", std::string(to_string(spec.kind))},
                       {"duration_range", {spec.duration.min, spec.duration.max}},
                       {"gain_range", {spec.gain.min, spec.gain.max}},
                       {"freq_range_hz", {spec.freq_hz.min, spec.freq_hz.max}},
                       {"rate_range_hz", {spec.rate_hz.min, spec.rate_hz.max}}};
}

namespace {
Range range_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw Error(ErrorKind::config, "ranges are two-element arrays");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}
}  // namespace

void from_json(const nlohmann::json& j, EventClassSpec& spec) {
    spec.class_id = j.at("class_id").get<int>();
    spec.name = j.at("name").get<std::string>();
    spec.kind = generator_kind_from_string(j.at("generator").get<std::string>());
    spec.duration = range_from(j.at("duration_range"));
    spec.gain = range_from(j.at("gain_range"));
    if (j.contains("freq_range_hz")) spec.freq_hz = range_from(j.at("freq_range_hz"));
    if (j.contains("rate_range_hz")) spec.rate_hz = range_from(j.at("rate_range_hz"));
}

void to_json(nlohmann::json& j, const DatasetConfig& config) {
    j = nlohmann::json{{"classes", config.classes},
                       {"splits", {{"train", config.n_train}, {"val", config.n_val}, {"test", config.n_test}}},
                       {"master_seed", config.master_seed},
                       {"events_per_scape", {config.min_events, config.max_events}},
                       {"background_gain_range", {config.background_gain.min, config.background_gain.max}}};
}

void from_json(const nlohmann::json& j, DatasetConfig& config) {
    config = DatasetConfig{};
    config.classes = j.contains("classes") ? j.at("classes").get<std::vector<EventClassSpec>>() : default_classes();
    if (j.contains("splits")) {
        const auto& s = j.at("splits");
        config.n_train = s.value("train", config.n_train);
        config.n_val = s.value("val", config.n_val);
        config.n_test = s.value("test", config.n_test);
    }
    config.master_seed = j.value("master_seed", config.master_seed);
    if (j.contains("events_per_scape")) {
        const auto r = range_from(j.at("events_per_scape"));
        config.min_events = static_cast<int>(r.min);
        config.max_events = static_cast<int>(r.max);
    }
    if (j.contains("background_gain_range")) config.background_gain = range_from(j.at("background_gain_range"));
}

}  // namespace sedkit::synth
