#pragma once

// Experiment orchestration: standalone SED (exp1), standalone SAD (exp2),
// separately trained SED re-weighted by SAD (exp3), and the jointly trained
// model with loss weights (0.5, 0.5) (exp4a) or (0.3, 0.7) (exp4b).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedkit/features.hpp"
#include "sedkit/labeling.hpp"
#include "sedkit/metrics.hpp"
#include "sedkit/network.hpp"
#include "sedkit/synthscape.hpp"
#include "sedkit/trainer.hpp"

namespace sedkit::experiments {

enum class ExperimentId { exp1, exp2, exp3, exp4a, exp4b };

std::string_view to_string(ExperimentId id);
ExperimentId experiment_from_string(std::string_view name);

/// Loss weights an experiment trains with. exp3 trains nothing of its own.
model::LossWeights weights_for(ExperimentId id);

struct ExperimentConfig {
    ExperimentId id = ExperimentId::exp4a;
    synth::DatasetConfig data;
    model::NetworkConfig net;
    model::TrainConfig train;
    double sed_threshold = 0.2;
    double sad_threshold = 0.5;
    std::vector<int> n_shared_sweep{0, 1, 2, 3};
    std::vector<model::LossWeights> weight_grid{{0.7, 0.3}, {0.5, 0.5}, {0.3, 0.7}};
    std::vector<std::uint64_t> seeds{1};
    int median_window = 0;  // 0 disables median smoothing of binary outputs
    bool verbose = false;
};

ExperimentConfig default_config(ExperimentId id = ExperimentId::exp4a);
void validate(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// FNV-1a digest of the canonical config JSON.
std::string config_digest(const ExperimentConfig& cfg);

struct Recording {
    features::FeatureMatrix features;
    labeling::FrameLabelMatrix gt;
    labeling::SadLabelVector sad;
    std::vector<EventAnnotation> events;
};

struct Dataset {
    std::vector<std::string> class_names;
    std::vector<Recording> train;
    std::vector<Recording> val;
    std::vector<Recording> test;
};

Recording make_recording(const synth::Soundscape& scape, const std::vector<std::string>& class_names);

/// Synthesizes and featurizes all three splits from `master_seed`.
Dataset build_dataset(const synth::DatasetConfig& cfg, std::uint64_t master_seed);

std::vector<model::Example> as_examples(std::span<const Recording> recordings);

struct TrainedModel {
    model::NetworkConfig net;
    model::LossWeights weights;
    model::TrainResult result;
};

TrainedModel train_model(const Dataset& data, model::NetworkConfig net, model::TrainConfig train,
                         model::LossWeights weights, bool verbose = false);

struct Predictions {
    std::vector<Matrix> sed;
    std::vector<Vector> sad;
};

Predictions predict(const model::NetworkConfig& net, std::span<const double> params,
                    std::span<const Recording> recordings);

struct CaseScores {
    metrics::MetricReport segment;
    metrics::MetricReport event;
};

/// SED binary matrices scored against the strong annotations.
CaseScores score_sed(std::span<const BinaryMatrix> sys, std::span<const Recording> refs,
                     const std::vector<std::string>& class_names);
/// SAD binary vectors scored against the decoded activity targets.
CaseScores score_sad(std::span<const BinaryVector> sys, std::span<const Recording> refs);

inline constexpr const char* kActivityLabel = "activity";

struct ResultRow {
    std::string case_name;
    std::string setting;
    std::uint64_t seed = 0;
    metrics::MetricReport segment;
    metrics::MetricReport event;
};

struct ResultsTable {
    std::string title;
    std::string config_digest;
    std::vector<std::uint64_t> seeds;
    std::vector<ResultRow> rows;
};

/// Rows of one experiment id, one per seed.
ResultsTable run_experiment(const ExperimentConfig& cfg);

/// exp1..exp4b plus the three branch scores of exp4a (J_SAD, J_SED,
/// J_SED_SAD), training each model once per seed.
ResultsTable run_suite(const ExperimentConfig& cfg);

enum class SweepAxis { n_shared, loss_weights };

/// One joint-model train + eval per axis value; same seeds for every value.
ResultsTable sweep(const ExperimentConfig& cfg, SweepAxis axis);

/// Validation-set scores of the experiment's model at 0.2/0.3/0.4/0.5.
ResultsTable threshold_sweep(const ExperimentConfig& cfg);

/// Per (case, setting) means over seeds, in first-appearance order.
std::vector<ResultRow> mean_rows(const ResultsTable& table);

nlohmann::json to_json(const ResultsTable& table);
std::string to_csv(const ResultsTable& table);

enum class TableLayout { scores, precision_recall };
std::string format_table(const ResultsTable& table, TableLayout layout = TableLayout::scores);

/// Writes <title>.json, <title>.csv and <title>.txt per table into `out_dir`.
void report(std::span<const ResultsTable> tables, const std::filesystem::path& out_dir);

}  // namespace sedkit::experiments
