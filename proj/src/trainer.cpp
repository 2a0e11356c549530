#include "sedkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sedkit::model {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw Error(ErrorKind::dimension, "adam: parameter, gradient and state sizes differ");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

bool EarlyStopping::update(double val_loss) {
    ++epoch_;
    if (epoch_ == 1 || val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        stale_ = 0;
        improved_ = true;
    } else {
        ++stale_;
        improved_ = false;
    }
    return stale_ >= patience_;
}

void validate(const TrainConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw Error(ErrorKind::config, "learning rate must be positive");
    if (cfg.max_epochs < 1) throw Error(ErrorKind::config, "max_epochs must be >= 1");
    if (cfg.batch_size < 1) throw Error(ErrorKind::config, "batch_size must be >= 1");
    if (cfg.early_stop_patience < 1) throw Error(ErrorKind::config, "early_stop_patience must be >= 1");
    validate(cfg.loss_weights);
}

LossParts mean_loss(const Network& net, std::span<const double> params, std::span<const Example> data,
                    LossWeights weights) {
    LossParts total;
    if (data.empty()) {
        return total;
    }
    for (const auto& ex : data) {
        const auto lp = net.loss(params, *ex.features, *ex.gt_sed, *ex.gt_sad, weights);
        total.joint += lp.joint;
        total.sed += lp.sed;
        total.sad += lp.sad;
    }
    const auto n = static_cast<double>(data.size());
    return {total.joint / n, total.sed / n, total.sad / n};
}

Gradient batch_gradient(const Network& net, std::span<const double> params, std::span<const Example> batch,
                        LossWeights weights, std::mt19937_64* rng) {
    Gradient total;
    total.values.assign(net.parameter_count(), 0.0);
    if (batch.empty()) {
        return total;
    }
    for (const auto& ex : batch) {
        const auto g = net.backward(params, *ex.features, *ex.gt_sed, *ex.gt_sad, weights, rng != nullptr, rng);
        for (std::size_t i = 0; i < total.values.size(); ++i) {
            total.values[i] += g.values[i];
        }
        total.loss.joint += g.loss.joint;
        total.loss.sed += g.loss.sed;
        total.loss.sad += g.loss.sad;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& v : total.values) v *= inv;
    total.loss.joint *= inv;
    total.loss.sed *= inv;
    total.loss.sad *= inv;
    return total;
}

TrainResult train(const Network& net, std::span<const Example> train_set, std::span<const Example> val_set,
                  const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
    validate(cfg);
    if (train_set.empty() || val_set.empty()) {
        throw Error(ErrorKind::config, "training needs nonempty train and validation splits");
    }
    std::mt19937_64 order_rng(mix_seed(cfg.seed, 1));
    std::mt19937_64 dropout_rng(mix_seed(cfg.seed, 2));
    std::vector<double> params = net.init_parameters(mix_seed(cfg.seed, 0));
    AdamState state = AdamState::zeros(params.size());
    const AdamConfig adam{cfg.lr};

    TrainResult result;
    EpochRecord first;
    first.train = mean_loss(net, params, train_set, cfg.loss_weights);
    first.val = mean_loss(net, params, val_set, cfg.loss_weights);
    result.log.push_back(first);
    if (on_epoch) on_epoch(first);
    result.params = params;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Example> batch;
    EarlyStopping stopper(cfg.early_stop_patience);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                 ++i) {
                batch.push_back(train_set[order[i]]);
            }
            const auto g = batch_gradient(net, params, batch, cfg.loss_weights, &dropout_rng);
            adam_step(params, g.values, state, adam);
            rec.train.joint += g.loss.joint;
            rec.train.sed += g.loss.sed;
            rec.train.sad += g.loss.sad;
            ++n_batches;
        }
        rec.train.joint /= n_batches;
        rec.train.sed /= n_batches;
        rec.train.sad /= n_batches;
        rec.val = mean_loss(net, params, val_set, cfg.loss_weights);
        result.log.push_back(rec);
        if (on_epoch) on_epoch(rec);

        const bool stop = stopper.update(rec.val.joint);
        if (stopper.improved()) {
            result.params = params;
            result.best_epoch = epoch;
        }
        if (stop) {
            result.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    return result;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"lr", c.lr},
                       {"max_epochs", c.max_epochs},
                       {"batch_size", c.batch_size},
                       {"early_stop_patience", c.early_stop_patience},
                       {"seed", c.seed},
                       {"loss_weights", c.loss_weights}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    c = TrainConfig{};
    c.lr = j.value("lr", c.lr);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss_weights")) c.loss_weights = j.at("loss_weights").get<LossWeights>();
}

std::string training_log_csv(std::span<const EpochRecord> log) {
    std::string out = "epoch,train_loss,val_loss,train_l_sed,train_l_sad,val_l_sed,val_l_sad\n";
    char line[256];
    for (const auto& r : log) {
        std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train.joint, r.val.joint,
                      r.train.sed, r.train.sad, r.val.sed, r.val.sad);
        out += line;
    }
    return out;
}

}  // namespace sedkit::model
