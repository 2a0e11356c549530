#pragma once

// Deterministic generator of annotated polyphonic soundscapes.
//
// A soundscape is a Brownian-noise bed plus 1..9 parametric sound events.
// Every function here is a pure function of its arguments and seed.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedkit/common.hpp"

namespace sedkit::synth {

enum class GeneratorKind { tone, chirp, noise_burst, impulse_train, am_noise };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view name);

struct Range {
    double min = 0.0;
    double max = 0.0;
};

/// Recipe for one event class. `freq_hz` is the carrier / fundamental range,
/// `rate_hz` the modulation, burst or click rate where the generator has one.
struct EventClassSpec {
    int class_id = 0;
    std::string name;
    GeneratorKind kind = GeneratorKind::tone;
    Range duration{0.5, 4.0};
    Range gain{0.2, 1.0};
    Range freq_hz{500.0, 2000.0};
    Range rate_hz{2.0, 8.0};
};

struct Placement {
    int class_id = 0;
    double onset = 0.0;
    double duration = 0.0;
    double gain = 0.0;
};

struct SoundscapeSpec {
    double duration = kSceneDuration;
    int sample_rate = kSampleRate;
    std::uint64_t seed = 0;
    std::vector<Placement> placements;
    double background_gain = 0.3;
};

struct AudioClip {
    std::vector<double> samples;
    int sample_rate = kSampleRate;
};

struct Soundscape {
    AudioClip audio;
    std::vector<EventAnnotation> events;
};

struct DatasetConfig {
    std::vector<EventClassSpec> classes;
    int n_train = 600;
    int n_val = 200;
    int n_test = 200;
    std::uint64_t master_seed = 1;
    int min_events = 1;
    int max_events = 9;
    Range background_gain{0.2, 0.5};
};

/// Five default classes, one per generator kind.
std::vector<EventClassSpec> default_classes();
DatasetConfig default_dataset_config();

/// Throws ErrorKind::config on any violated class or dataset invariant.
void validate(const DatasetConfig& config);
void validate(const EventClassSpec& spec, double scene_duration = kSceneDuration);

std::vector<std::string> class_names(const DatasetConfig& config);

/// Integrated white noise, de-meaned and scaled so that max |x| == 1.
std::vector<double> gen_brownian_noise(std::size_t n_samples, std::uint64_t seed);

/// Render one event of `spec` lasting `duration` seconds. Peak <= 1 with
/// 10 ms linear fades at both ends.
std::vector<double> render_event(const EventClassSpec& spec, double duration, std::uint64_t seed,
                                 int sample_rate = kSampleRate);

SoundscapeSpec sample_spec(const DatasetConfig& config, std::uint64_t seed);

Soundscape compose(const SoundscapeSpec& spec, std::span<const EventClassSpec> classes);

/// Seed of scape `index` within split `split` (0 train, 1 val, 2 test).
std::uint64_t scape_seed(std::uint64_t master_seed, int split, int index);

/// Maximum number of simultaneously active placements.
int max_polyphony(const SoundscapeSpec& spec);

void to_json(nlohmann::json& j, const EventClassSpec& spec);
void from_json(const nlohmann::json& j, EventClassSpec& spec);
void to_json(nlohmann::json& j, const DatasetConfig& config);
void from_json(const nlohmann::json& j, DatasetConfig& config);

}  // namespace sedkit::synth
