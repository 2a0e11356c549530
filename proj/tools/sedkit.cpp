// sedkit command-line front end.
//
//   sedkit synth      --config c.json --out dir/
//   sedkit featurize  --in dir/ --out dir/
//   sedkit train      --experiment exp4a --seed N
//   sedkit predict    --experiment exp3 --seed N
//   sedkit evaluate   --ref dir/ --est dir/ --mode segment|event
//   sedkit experiment --id exp3 --seeds 3
//   sedkit sweep      --axis n_shared|loss_weights --seeds 3
//
// Artifacts go under $SEDKIT_DATA_DIR (default ./sedkit_data).

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sedkit/experiments.hpp"
#include "sedkit/features.hpp"
#include "sedkit/io.hpp"
#include "sedkit/metrics.hpp"
#include "sedkit/postproc.hpp"

namespace fs = std::filesystem;
using namespace sedkit;
using experiments::ExperimentConfig;
using experiments::ExperimentId;

namespace {

fs::path data_root() {
    const char* env = std::getenv("SEDKIT_DATA_DIR");
    return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("sedkit_data");
}

std::string scape_name(const char* split, int index) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d", split, index);
    return buf;
}

constexpr const char* kSplits[3] = {"train", "val", "test"};

// Options shared by the commands that train or load models.
struct ModelOptions {
    std::string config;
    std::optional<int> max_epochs;
    std::optional<int> n_train, n_val, n_test;
    bool verbose = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config, "experiment config JSON");
        cmd->add_option("--max-epochs", max_epochs, "override train.max_epochs");
        cmd->add_option("--n-train", n_train, "override the train split size");
        cmd->add_option("--n-val", n_val, "override the validation split size");
        cmd->add_option("--n-test", n_test, "override the test split size");
        cmd->add_flag("-v,--verbose", verbose, "log training progress to stderr");
    }

    ExperimentConfig load(ExperimentId id) const {
        ExperimentConfig cfg = experiments::default_config(id);
        if (!config.empty()) {
            auto j = nlohmann::json::parse(io::read_text(config));
            j["experiment"] = std::string(experiments::to_string(id));
            cfg = experiments::config_from_json(j);
        }
        if (max_epochs) cfg.train.max_epochs = *max_epochs;
        if (n_train) cfg.data.n_train = *n_train;
        if (n_val) cfg.data.n_val = *n_val;
        if (n_test) cfg.data.n_test = *n_test;
        cfg.verbose = verbose;
        return cfg;
    }
};

// Models of every experiment trained from the same data and training
// settings share one directory, so exp3 can find the exp1 and exp2 weights.
fs::path models_dir(ExperimentConfig cfg) {
    cfg.id = ExperimentId::exp4a;
    cfg.seeds = {1};
    return data_root() / ("models-" + experiments::config_digest(cfg));
}

fs::path weights_stem(const ExperimentConfig& cfg, ExperimentId id, std::uint64_t seed) {
    return models_dir(cfg) / std::string(experiments::to_string(id)) / ("seed-" + std::to_string(seed)) / "model";
}

model::NetworkConfig network_for(const ExperimentConfig& cfg, ExperimentId id) {
    auto net = cfg.net;
    if (id == ExperimentId::exp1 || id == ExperimentId::exp2) net.n_shared = 0;
    return net;
}

experiments::Dataset dataset_for(const ExperimentConfig& cfg, std::uint64_t seed) {
    return experiments::build_dataset(cfg.data, mix_seed(cfg.data.master_seed, seed));
}

int cmd_synth(const std::string& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
    auto cfg = synth::default_dataset_config();
    if (!config_path.empty()) {
        const auto j = nlohmann::json::parse(io::read_text(config_path));
        cfg = (j.contains("dataset") ? j.at("dataset") : j).get<synth::DatasetConfig>();
    }
    if (seed) cfg.master_seed = *seed;
    synth::validate(cfg);
    const int sizes[3] = {cfg.n_train, cfg.n_val, cfg.n_test};
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < sizes[s]; ++i) {
            const auto spec = synth::sample_spec(cfg, synth::scape_seed(cfg.master_seed, s, i));
            const auto scape = synth::compose(spec, cfg.classes);
            const auto name = scape_name(kSplits[s], i);
            io::write_wav(out / kSplits[s] / (name + ".wav"), scape.audio);
            io::write_annotations(out / kSplits[s] / (name + ".tsv"), scape.events);
        }
    }
    const nlohmann::json j = cfg;
    io::write_text(out / "dataset.json", j.dump(2) + "\n");
    std::printf("wrote %d + %d + %d soundscapes to %s\n", cfg.n_train, cfg.n_val, cfg.n_test, out.string().c_str());
    return 0;
}

int cmd_featurize(const fs::path& in, const fs::path& out) {
    std::vector<fs::path> wavs;
    for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".wav") wavs.push_back(e.path());
    }
    std::sort(wavs.begin(), wavs.end());
    for (const auto& w : wavs) {
        const auto clip = io::read_wav(w);
        const auto f = features::extract(clip.samples, clip.sample_rate);
        const auto rel = fs::relative(w, in).replace_extension();
        io::write_matrix_f32(out / rel, f.values,
                             {{"n_mels", f.bands()}, {"T", f.frames()}, {"frame_hop", f.frame_hop},
                              {"sr", clip.sample_rate}});
    }
    std::printf("featurized %zu files into %s\n", wavs.size(), out.string().c_str());
    return 0;
}

int cmd_train(const ModelOptions& opt, const std::string& exp, std::uint64_t seed) {
    const auto id = experiments::experiment_from_string(exp);
    const auto cfg = opt.load(id);
    experiments::validate(cfg);
    const auto weights = experiments::weights_for(id);  // exp3 has no model of its own
    const auto data = dataset_for(cfg, seed);
    auto train = cfg.train;
    train.seed = seed;
    const auto m = experiments::train_model(data, network_for(cfg, id), train, weights, cfg.verbose);
    const auto stem = weights_stem(cfg, id, seed);
    io::write_weights(stem, {m.net, seed, m.result.best_epoch, exp, m.result.params});
    io::write_text(stem.parent_path() / "training_log.csv", model::training_log_csv(m.result.log));
    std::printf("trained %s seed %llu: best epoch %d of %zu, weights at %s\n", exp.c_str(),
                static_cast<unsigned long long>(seed), m.result.best_epoch, m.result.log.size() - 1,
                stem.string().c_str());
    return 0;
}

int cmd_predict(const ModelOptions& opt, const std::string& exp, std::uint64_t seed) {
    const auto id = experiments::experiment_from_string(exp);
    const auto cfg = opt.load(id);
    experiments::validate(cfg);
    const auto load = [&](ExperimentId which) {
        const auto w = io::read_weights(weights_stem(cfg, which, seed));
        if (w.network != network_for(cfg, which)) {
            throw Error(ErrorKind::dependency, "weights for " + std::string(experiments::to_string(which)) +
                                                   " were trained with a different network");
        }
        return w;
    };
    std::vector<io::WeightsFile> models;
    if (id == ExperimentId::exp3) {
        models.push_back(load(ExperimentId::exp1));
        models.push_back(load(ExperimentId::exp2));
    } else {
        models.push_back(load(id));
    }
    const auto data = dataset_for(cfg, seed);
    const auto sed_src = experiments::predict(models.front().network, models.front().params, data.test);
    const auto sad_src = experiments::predict(models.back().network, models.back().params, data.test);

    const auto out = models_dir(cfg) / "predictions" / exp / ("seed-" + std::to_string(seed));
    const std::vector<std::string> activity{experiments::kActivityLabel};
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        const auto name = scape_name("test", static_cast<int>(i));
        const double hop = data.test[i].features.frame_hop;
        std::vector<EventAnnotation> est, ref;
        if (id == ExperimentId::exp2) {
            const auto b = postproc::binarize(sad_src.sad[i], postproc::Threshold(cfg.sad_threshold));
            est = postproc::decode_events(BinaryMatrix(b), activity, hop);
            ref = postproc::decode_events(BinaryMatrix(data.test[i].sad.values), activity, hop);
        } else {
            const Matrix p = id == ExperimentId::exp1 ? sed_src.sed[i]
                                                      : postproc::reweight(sed_src.sed[i], sad_src.sad[i]);
            est = postproc::decode_events(postproc::binarize(p, postproc::Threshold(cfg.sed_threshold)),
                                          data.class_names, hop);
            ref = data.test[i].events;
        }
        io::write_annotations(out / "est" / (name + ".tsv"), est);
        io::write_annotations(out / "ref" / (name + ".tsv"), ref);
    }
    std::printf("wrote %zu predictions to %s\n", data.test.size(), (out / "est").string().c_str());
    return 0;
}

int cmd_evaluate(const fs::path& ref_dir, const fs::path& est_dir, const std::string& mode_name,
                 const std::string& json_out, double duration) {
    if (mode_name != "segment" && mode_name != "event") {
        throw Error(ErrorKind::config, "mode must be segment or event");
    }
    const auto mode = mode_name == "segment" ? metrics::Mode::segment : metrics::Mode::event;
    std::map<std::string, fs::path> refs;
    for (const auto& e : fs::directory_iterator(ref_dir)) {
        if (e.path().extension() == ".tsv") refs[e.path().filename().string()] = e.path();
    }
    std::vector<std::vector<EventAnnotation>> ref_lists, est_lists;
    for (const auto& [name, path] : refs) {
        ref_lists.push_back(io::read_annotations(path));
        const auto est = est_dir / name;
        est_lists.push_back(fs::exists(est) ? io::read_annotations(est) : std::vector<EventAnnotation>{});
    }
    const auto report = metrics::evaluate_files(ref_lists, est_lists, mode, duration);
    if (!json_out.empty()) io::write_text(json_out, metrics::to_json(report).dump(2) + "\n");
    std::printf("%zu files\n%s", refs.size(), metrics::format_report(report).c_str());
    return 0;
}

std::vector<std::uint64_t> seed_list(std::optional<std::uint64_t> seed, int n_seeds) {
    if (seed) return {*seed};
    std::vector<std::uint64_t> out;
    for (int s = 1; s <= n_seeds; ++s) out.push_back(static_cast<std::uint64_t>(s));
    return out;
}

int write_run(const experiments::ResultsTable& table) {
    const auto dir = data_root() / (table.title + "-" + table.config_digest);
    io::write_text(dir / "results.json", experiments::to_json(table).dump(2) + "\n");
    experiments::report(std::span(&table, 1), dir);
    std::cout << experiments::format_table(table) << "\n"
              << experiments::format_table(table, experiments::TableLayout::precision_recall)
              << "results in " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sound event detection with an auxiliary activity-detection task"};
    app.require_subcommand(1);

    std::string synth_config, synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth_cmd = app.add_subcommand("synth", "generate annotated soundscapes");
    synth_cmd->add_option("--config", synth_config, "dataset (or experiment) config JSON");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "override the master seed");

    std::string feat_in, feat_out;
    auto* feat_cmd = app.add_subcommand("featurize", "log-mel features for every .wav under a directory");
    feat_cmd->add_option("--in", feat_in, "input directory")->required();
    feat_cmd->add_option("--out", feat_out, "output directory")->required();

    ModelOptions train_opt, predict_opt, exp_opt, sweep_opt;
    std::string train_exp, predict_exp;
    std::uint64_t train_seed = 1, predict_seed = 1;
    auto* train_cmd = app.add_subcommand("train", "train one experiment's model");
    train_cmd->add_option("--experiment", train_exp, "exp1, exp2, exp4a or exp4b")->required();
    train_cmd->add_option("--seed", train_seed, "run seed");
    train_opt.attach(train_cmd);

    auto* predict_cmd = app.add_subcommand("predict", "decode test-set events from trained weights");
    predict_cmd->add_option("--experiment", predict_exp, "exp1 .. exp4b")->required();
    predict_cmd->add_option("--seed", predict_seed, "run seed");
    predict_opt.attach(predict_cmd);

    std::string eval_ref, eval_est, eval_mode = "segment", eval_json;
    double eval_duration = kSceneDuration;
    auto* eval_cmd = app.add_subcommand("evaluate", "score estimated event lists against references");
    eval_cmd->add_option("--ref", eval_ref, "directory of reference .tsv files")->required();
    eval_cmd->add_option("--est", eval_est, "directory of estimated .tsv files (same names)")->required();
    eval_cmd->add_option("--mode", eval_mode, "segment or event");
    eval_cmd->add_option("--json", eval_json, "also write the report to this file");
    eval_cmd->add_option("--duration", eval_duration, "file duration in seconds");

    std::string exp_id = "exp4a";
    std::optional<std::uint64_t> exp_seed;
    int exp_seeds = 1;
    bool exp_threshold_sweep = false, exp_suite = false;
    auto* exp_cmd = app.add_subcommand("experiment", "train, predict and score one experiment");
    exp_cmd->add_option("--id", exp_id, "exp1, exp2, exp3, exp4a or exp4b");
    exp_cmd->add_option("--seed", exp_seed, "single run seed");
    exp_cmd->add_option("--seeds", exp_seeds, "use seeds 1..N");
    exp_cmd->add_flag("--threshold-sweep", exp_threshold_sweep, "score the validation set at 0.2/0.3/0.4/0.5");
    exp_cmd->add_flag("--all", exp_suite, "run every experiment plus the joint-model branch scores");
    exp_opt.attach(exp_cmd);

    std::string sweep_axis = "n_shared";
    std::optional<std::uint64_t> sweep_seed;
    int sweep_seeds = 1;
    auto* sweep_cmd = app.add_subcommand("sweep", "joint model over shared depths or loss weights");
    sweep_cmd->add_option("--axis", sweep_axis, "n_shared or loss_weights");
    sweep_cmd->add_option("--seed", sweep_seed, "single run seed");
    sweep_cmd->add_option("--seeds", sweep_seeds, "use seeds 1..N");
    sweep_opt.attach(sweep_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd) return cmd_synth(synth_config, synth_out, synth_seed);
        if (*feat_cmd) return cmd_featurize(feat_in, feat_out);
        if (*train_cmd) return cmd_train(train_opt, train_exp, train_seed);
        if (*predict_cmd) return cmd_predict(predict_opt, predict_exp, predict_seed);
        if (*eval_cmd) return cmd_evaluate(eval_ref, eval_est, eval_mode, eval_json, eval_duration);
        if (*exp_cmd) {
            auto cfg = exp_opt.load(experiments::experiment_from_string(exp_id));
            cfg.seeds = seed_list(exp_seed, exp_seeds);
            if (exp_suite) return write_run(experiments::run_suite(cfg));
            if (exp_threshold_sweep) return write_run(experiments::threshold_sweep(cfg));
            return write_run(experiments::run_experiment(cfg));
        }
        if (*sweep_cmd) {
            if (sweep_axis != "n_shared" && sweep_axis != "loss_weights") {
                throw Error(ErrorKind::config, "axis must be n_shared or loss_weights");
            }
            auto cfg = sweep_opt.load(ExperimentId::exp4a);
            cfg.seeds = seed_list(sweep_seed, sweep_seeds);
            return write_run(experiments::sweep(
                cfg, sweep_axis == "n_shared" ? experiments::SweepAxis::n_shared : experiments::SweepAxis::loss_weights));
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "sedkit: %s\n", e.what());
        return e.kind() == ErrorKind::dependency ? 3 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sedkit: %s\n", e.what());
        return 2;
    }
    return 0;
}
