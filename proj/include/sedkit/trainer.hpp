#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sedkit/common.hpp"
#include "sedkit/network.hpp"

namespace sedkit::model {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg = {});

/// Stops once the monitored loss has failed to improve for `patience`
/// consecutive epochs.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    /// Feed one epoch's validation loss; true when training should stop.
    bool update(double val_loss);

    bool improved() const { return improved_; }
    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_; }
    int epochs_seen() const { return epoch_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int stale_ = 0;
    bool improved_ = false;
    double best_ = 0.0;
};

struct TrainConfig {
    double lr = 0.001;
    int max_epochs = 200;
    int batch_size = 8;
    int early_stop_patience = 20;
    std::uint64_t seed = 1;
    LossWeights loss_weights{};

    bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& cfg);

/// One training example: bands x T features with T x C and T targets.
struct Example {
    const Matrix* features = nullptr;
    const BinaryMatrix* gt_sed = nullptr;
    const BinaryVector* gt_sad = nullptr;
};

struct EpochRecord {
    int epoch = 0;
    LossParts train;
    LossParts val;
};

struct TrainResult {
    std::vector<double> params;
    std::vector<EpochRecord> log;
    int best_epoch = 0;
    bool stopped_early = false;
};

/// Mean eval-mode loss over a set of examples.
LossParts mean_loss(const Network& net, std::span<const double> params, std::span<const Example> data,
                    LossWeights weights);

/// Mean gradient over a batch (train mode when `rng` is non-null).
Gradient batch_gradient(const Network& net, std::span<const double> params, std::span<const Example> batch,
                        LossWeights weights, std::mt19937_64* rng);

/// Mini-batch Adam on whole recordings. Epoch 0 of the log holds the
/// untrained eval-mode losses; each later record holds the mean training
/// batch loss and the eval-mode validation loss. Returns the parameters of
/// the epoch with the lowest validation joint loss.
TrainResult train(const Network& net, std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {});

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

/// CSV with columns epoch,train_loss,val_loss,train_l_sed,train_l_sad,val_l_sed,val_l_sad.
std::string training_log_csv(std::span<const EpochRecord> log);

}  // namespace sedkit::model
