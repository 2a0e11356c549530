#include "sedkit/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>

#include "sedkit/io.hpp"
#include "sedkit/postproc.hpp"

namespace sedkit::experiments {

namespace {

using model::LossWeights;

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string weights_label(LossWeights w) { return "(" + fmt("%.2g", w.a) + ", " + fmt("%.2g", w.b) + ")"; }

// Trains each model at most once for one seed and caches its test-set outputs.
class SeedRun {
public:
    SeedRun(const ExperimentConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), seed_(seed), data_(build_dataset(cfg.data, mix_seed(cfg.data.master_seed, seed))) {}

    const Dataset& data() const { return data_; }

    const Predictions& outputs(const std::string& key, model::NetworkConfig net, LossWeights w,
                               std::span<const Recording> split) {
        auto it = preds_.find(key);
        if (it != preds_.end()) {
            return it->second;
        }
        auto train_cfg = cfg_.train;
        train_cfg.seed = seed_;
        if (cfg_.verbose) {
            std::cerr << "[seed " << seed_ << "] training " << key << "\n";
        }
        const auto trained = train_model(data_, net, train_cfg, w, cfg_.verbose);
        return preds_.emplace(key, predict(trained.net, trained.result.params, split)).first->second;
    }

    const Predictions& experiment(ExperimentId id) {
        auto net = cfg_.net;
        if (id == ExperimentId::exp1 || id == ExperimentId::exp2) {
            net.n_shared = 0;
        }
        return outputs(std::string(to_string(id)), net, weights_for(id), data_.test);
    }

    BinaryMatrix sed_binary(const Matrix& p) const {
        auto b = postproc::binarize(p, postproc::Threshold(cfg_.sed_threshold));
        return cfg_.median_window > 1 ? postproc::median_smooth(b, cfg_.median_window) : b;
    }

    BinaryVector sad_binary(const Vector& p) const {
        BinaryMatrix b = postproc::binarize(p, postproc::Threshold(cfg_.sad_threshold));
        if (cfg_.median_window > 1) b = postproc::median_smooth(b, cfg_.median_window);
        return b.col(0);
    }

    CaseScores score_sed_of(const std::vector<Matrix>& p, std::span<const Recording> refs) const {
        std::vector<BinaryMatrix> b;
        b.reserve(p.size());
        for (const auto& m : p) b.push_back(sed_binary(m));
        return score_sed(b, refs, data_.class_names);
    }

    CaseScores score_joint(const Predictions& sed_src, const Predictions& sad_src,
                           std::span<const Recording> refs) const {
        std::vector<Matrix> joint;
        joint.reserve(sed_src.sed.size());
        for (std::size_t i = 0; i < sed_src.sed.size(); ++i) {
            joint.push_back(postproc::reweight(sed_src.sed[i], sad_src.sad[i]));
        }
        return score_sed_of(joint, refs);
    }

    CaseScores score_sad_of(const Predictions& src, std::span<const Recording> refs) const {
        std::vector<BinaryVector> b;
        b.reserve(src.sad.size());
        for (const auto& v : src.sad) b.push_back(sad_binary(v));
        return score_sad(b, refs);
    }

    CaseScores score_case(ExperimentId id) {
        switch (id) {
            case ExperimentId::exp1: return score_sed_of(experiment(id).sed, data_.test);
            case ExperimentId::exp2: return score_sad_of(experiment(id), data_.test);
            case ExperimentId::exp3:
                return score_joint(experiment(ExperimentId::exp1), experiment(ExperimentId::exp2), data_.test);
            case ExperimentId::exp4a:
            case ExperimentId::exp4b: {
                const auto& p = experiment(id);
                return score_joint(p, p, data_.test);
            }
        }
        throw Error(ErrorKind::contract, "unknown experiment");
    }

    ResultRow row(const std::string& name, const std::string& setting, const CaseScores& s) const {
        return {name, setting, seed_, s.segment, s.event};
    }

private:
    const ExperimentConfig& cfg_;
    std::uint64_t seed_;
    Dataset data_;
    std::map<std::string, Predictions> preds_;
};

ResultsTable empty_table(const ExperimentConfig& cfg, std::string title) {
    ResultsTable t;
    t.title = std::move(title);
    t.config_digest = config_digest(cfg);
    t.seeds = cfg.seeds;
    return t;
}

nlohmann::json report_json(const metrics::MetricReport& r) { return metrics::to_json(r); }

}  // namespace

std::string_view to_string(ExperimentId id) {
    switch (id) {
        case ExperimentId::exp1: return "exp1";
        case ExperimentId::exp2: return "exp2";
        case ExperimentId::exp3: return "exp3";
        case ExperimentId::exp4a: return "exp4a";
        case ExperimentId::exp4b: return "exp4b";
    }
    return "exp4a";
}

ExperimentId experiment_from_string(std::string_view name) {
    for (auto id : {ExperimentId::exp1, ExperimentId::exp2, ExperimentId::exp3, ExperimentId::exp4a,
                    ExperimentId::exp4b}) {
        if (to_string(id) == name) return id;
    }
    throw Error(ErrorKind::config, "unknown experiment '" + std::string(name) + "'");
}

LossWeights weights_for(ExperimentId id) {
    switch (id) {
        case ExperimentId::exp1: return {1.0, 0.0};
        case ExperimentId::exp2: return {0.0, 1.0};
        case ExperimentId::exp4a: return {0.5, 0.5};
        case ExperimentId::exp4b: return {0.3, 0.7};
        case ExperimentId::exp3: break;
    }
    throw Error(ErrorKind::dependency, "exp3 has no model of its own; it combines the exp1 and exp2 models");
}

ExperimentConfig default_config(ExperimentId id) {
    ExperimentConfig cfg;
    cfg.id = id;
    cfg.data = synth::default_dataset_config();
    cfg.net = model::default_network_config(static_cast<int>(cfg.data.classes.size()));
    cfg.train.max_epochs = 40;
    cfg.train.early_stop_patience = 8;
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    synth::validate(cfg.data);
    model::validate(cfg.net);
    model::validate(cfg.train);
    if (cfg.net.n_classes != static_cast<int>(cfg.data.classes.size())) {
        throw Error(ErrorKind::config, "network class count differs from the dataset");
    }
    postproc::Threshold(cfg.sed_threshold);
    postproc::Threshold(cfg.sad_threshold);
    if (cfg.seeds.empty()) throw Error(ErrorKind::config, "no seeds");
    if (cfg.median_window < 0) throw Error(ErrorKind::config, "negative median window");
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& w : cfg.weight_grid) grid.push_back(w);
    return nlohmann::json{{"experiment", std::string(to_string(cfg.id))},
                          {"dataset", cfg.data},
                          {"network", cfg.net},
                          {"train", cfg.train},
                          {"sed_threshold", cfg.sed_threshold},
                          {"sad_threshold", cfg.sad_threshold},
                          {"n_shared_sweep", cfg.n_shared_sweep},
                          {"loss_weight_grid", grid},
                          {"seeds", cfg.seeds},
                          {"median_window", cfg.median_window}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg = default_config(experiment_from_string(j.value("experiment", std::string("exp4a"))));
    if (j.contains("dataset")) cfg.data = j.at("dataset").get<synth::DatasetConfig>();
    if (j.contains("network")) cfg.net = j.at("network").get<model::NetworkConfig>();
    if (j.contains("train")) cfg.train = j.at("train").get<model::TrainConfig>();
    cfg.sed_threshold = j.value("sed_threshold", cfg.sed_threshold);
    cfg.sad_threshold = j.value("sad_threshold", cfg.sad_threshold);
    if (j.contains("n_shared_sweep")) cfg.n_shared_sweep = j.at("n_shared_sweep").get<std::vector<int>>();
    if (j.contains("loss_weight_grid")) {
        cfg.weight_grid = j.at("loss_weight_grid").get<std::vector<LossWeights>>();
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.median_window = j.value("median_window", cfg.median_window);
    return cfg;
}

std::string config_digest(const ExperimentConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

Recording make_recording(const synth::Soundscape& scape, const std::vector<std::string>& class_names) {
    Recording r;
    r.features = features::extract(scape.audio.samples, scape.audio.sample_rate);
    r.events = scape.events;
    postproc::sort_events(r.events);
    r.gt = labeling::rasterize(r.events, r.features.frames(), class_names, r.features.frame_hop);
    r.sad = labeling::derive_sad(r.gt);
    return r;
}

Dataset build_dataset(const synth::DatasetConfig& cfg, std::uint64_t master_seed) {
    synth::validate(cfg);
    Dataset data;
    data.class_names = synth::class_names(cfg);
    const int sizes[3] = {cfg.n_train, cfg.n_val, cfg.n_test};
    std::vector<Recording>* splits[3] = {&data.train, &data.val, &data.test};
    for (int s = 0; s < 3; ++s) {
        splits[s]->reserve(static_cast<std::size_t>(sizes[s]));
        for (int i = 0; i < sizes[s]; ++i) {
            const auto spec = synth::sample_spec(cfg, synth::scape_seed(master_seed, s, i));
            splits[s]->push_back(make_recording(synth::compose(spec, cfg.classes), data.class_names));
        }
    }
    return data;
}

std::vector<model::Example> as_examples(std::span<const Recording> recordings) {
    std::vector<model::Example> out;
    out.reserve(recordings.size());
    for (const auto& r : recordings) {
        out.push_back({&r.features.values, &r.gt.values, &r.sad.values});
    }
    return out;
}

TrainedModel train_model(const Dataset& data, model::NetworkConfig net, model::TrainConfig train,
                         model::LossWeights weights, bool verbose) {
    train.loss_weights = weights;
    const model::Network network(net);
    const auto tr = as_examples(data.train);
    const auto va = as_examples(data.val);
    std::function<void(const model::EpochRecord&)> cb;
    if (verbose) {
        cb = [](const model::EpochRecord& r) {
            std::fprintf(stderr, "  epoch %3d  train %.5f  val %.5f (sed %.5f sad %.5f)\n", r.epoch, r.train.joint,
                         r.val.joint, r.val.sed, r.val.sad);
        };
    }
    TrainedModel m{net, weights, model::train(network, tr, va, train, cb)};
    return m;
}

Predictions predict(const model::NetworkConfig& net, std::span<const double> params,
                    std::span<const Recording> recordings) {
    const model::Network network(net);
    Predictions p;
    p.sed.reserve(recordings.size());
    p.sad.reserve(recordings.size());
    for (const auto& r : recordings) {
        auto out = network.forward(params, r.features.values);
        p.sed.push_back(std::move(out.sed));
        p.sad.push_back(std::move(out.sad));
    }
    return p;
}

CaseScores score_sed(std::span<const BinaryMatrix> sys, std::span<const Recording> refs,
                     const std::vector<std::string>& class_names) {
    if (sys.size() != refs.size()) {
        throw Error(ErrorKind::dimension, "prediction and reference counts differ");
    }
    std::vector<std::vector<EventAnnotation>> ref_events, sys_events;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        ref_events.push_back(refs[i].events);
        sys_events.push_back(postproc::decode_events(sys[i], class_names, refs[i].features.frame_hop));
    }
    return {metrics::evaluate_files(ref_events, sys_events, metrics::Mode::segment),
            metrics::evaluate_files(ref_events, sys_events, metrics::Mode::event)};
}

CaseScores score_sad(std::span<const BinaryVector> sys, std::span<const Recording> refs) {
    if (sys.size() != refs.size()) {
        throw Error(ErrorKind::dimension, "prediction and reference counts differ");
    }
    const std::vector<std::string> names{kActivityLabel};
    std::vector<std::vector<EventAnnotation>> ref_events, sys_events;
    for (std::size_t i = 0; i < sys.size(); ++i) {
        const double hop = refs[i].features.frame_hop;
        ref_events.push_back(postproc::decode_events(BinaryMatrix(refs[i].sad.values), names, hop));
        sys_events.push_back(postproc::decode_events(BinaryMatrix(sys[i]), names, hop));
    }
    return {metrics::evaluate_files(ref_events, sys_events, metrics::Mode::segment),
            metrics::evaluate_files(ref_events, sys_events, metrics::Mode::event)};
}

ResultsTable run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    auto table = empty_table(cfg, std::string(to_string(cfg.id)));
    for (auto seed : cfg.seeds) {
        SeedRun run(cfg, seed);
        table.rows.push_back(run.row(std::string(to_string(cfg.id)), "", run.score_case(cfg.id)));
    }
    return table;
}

ResultsTable run_suite(const ExperimentConfig& cfg) {
    validate(cfg);
    auto table = empty_table(cfg, "experiments");
    for (auto seed : cfg.seeds) {
        SeedRun run(cfg, seed);
        for (auto id : {ExperimentId::exp1, ExperimentId::exp2, ExperimentId::exp3, ExperimentId::exp4a,
                        ExperimentId::exp4b}) {
            table.rows.push_back(run.row(std::string(to_string(id)), "", run.score_case(id)));
        }
        const auto& joint = run.experiment(ExperimentId::exp4a);
        table.rows.push_back(run.row("J_SAD", "exp4a", run.score_sad_of(joint, run.data().test)));
        table.rows.push_back(run.row("J_SED", "exp4a", run.score_sed_of(joint.sed, run.data().test)));
        table.rows.push_back(run.row("J_SED_SAD", "exp4a", run.score_joint(joint, joint, run.data().test)));
    }
    return table;
}

ResultsTable sweep(const ExperimentConfig& cfg, SweepAxis axis) {
    validate(cfg);
    if ((axis == SweepAxis::n_shared && cfg.n_shared_sweep.empty()) ||
        (axis == SweepAxis::loss_weights && cfg.weight_grid.empty())) {
        throw Error(ErrorKind::config, "sweep axis has no values");
    }
    auto table = empty_table(cfg, axis == SweepAxis::n_shared ? "sweep_n_shared" : "sweep_loss_weights");
    for (auto seed : cfg.seeds) {
        SeedRun run(cfg, seed);
        if (axis == SweepAxis::n_shared) {
            for (int n : cfg.n_shared_sweep) {
                auto net = cfg.net;
                net.n_shared = n;
                const std::string setting = "n_shared=" + std::to_string(n);
                const auto& p = run.outputs(setting, net, weights_for(ExperimentId::exp4a), run.data().test);
                table.rows.push_back(run.row("exp4", setting, run.score_joint(p, p, run.data().test)));
            }
        } else {
            for (const auto& w : cfg.weight_grid) {
                const std::string setting = weights_label(w);
                const auto& p = run.outputs(setting, cfg.net, w, run.data().test);
                table.rows.push_back(run.row("exp4", setting, run.score_joint(p, p, run.data().test)));
            }
        }
    }
    return table;
}

ResultsTable threshold_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    auto table = empty_table(cfg, std::string(to_string(cfg.id)) + "_threshold_sweep");
    for (auto seed : cfg.seeds) {
        SeedRun run(cfg, seed);
        const auto& val = run.data().val;
        const auto net_for = [&](ExperimentId id) {
            auto net = cfg.net;
            if (id == ExperimentId::exp1 || id == ExperimentId::exp2) net.n_shared = 0;
            return net;
        };
        const auto val_outputs = [&](ExperimentId id) -> const Predictions& {
            return run.outputs(std::string(to_string(id)) + "/val", net_for(id), weights_for(id), val);
        };
        for (double thr : {0.2, 0.3, 0.4, 0.5}) {
            const auto scorer = [&](const Predictions& sed_src, const Predictions& sad_src, bool joint) {
                std::vector<BinaryMatrix> b;
                for (std::size_t i = 0; i < sed_src.sed.size(); ++i) {
                    const Matrix p = joint ? postproc::reweight(sed_src.sed[i], sad_src.sad[i]) : sed_src.sed[i];
                    b.push_back(postproc::binarize(p, postproc::Threshold(thr)));
                }
                return score_sed(b, val, run.data().class_names);
            };
            CaseScores s;
            switch (cfg.id) {
                case ExperimentId::exp1: s = scorer(val_outputs(cfg.id), val_outputs(cfg.id), false); break;
                case ExperimentId::exp2: {
                    std::vector<BinaryVector> b;
                    for (const auto& v : val_outputs(cfg.id).sad) {
                        b.push_back(postproc::binarize(v, postproc::Threshold(thr)));
                    }
                    s = score_sad(b, val);
                    break;
                }
                case ExperimentId::exp3:
                    s = scorer(val_outputs(ExperimentId::exp1), val_outputs(ExperimentId::exp2), true);
                    break;
                default: s = scorer(val_outputs(cfg.id), val_outputs(cfg.id), true); break;
            }
            table.rows.push_back(run.row(std::string(to_string(cfg.id)), "threshold=" + fmt("%.1f", thr), s));
        }
    }
    return table;
}

std::vector<ResultRow> mean_rows(const ResultsTable& table) {
    std::vector<ResultRow> out;
    std::vector<int> counts;
    const auto add = [](metrics::MetricReport& acc, const metrics::MetricReport& r) {
        acc.f1 += r.f1;
        acc.precision += r.precision;
        acc.recall += r.recall;
        acc.error_rate += r.error_rate;
    };
    for (const auto& row : table.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ResultRow& r) {
            return r.case_name == row.case_name && r.setting == row.setting;
        });
        if (it == out.end()) {
            ResultRow fresh = row;
            fresh.seed = 0;
            for (auto* r : {&fresh.segment, &fresh.event}) {
                r->f1 = r->precision = r->recall = r->error_rate = 0.0;
                r->stats = metrics::IntermediateStats{};
                r->stats.mode = r->mode;
                r->stats.resolution = r->resolution;
            }
            out.push_back(fresh);
            counts.push_back(0);
            it = out.end() - 1;
        }
        add(it->segment, row.segment);
        add(it->event, row.event);
        ++counts[static_cast<std::size_t>(it - out.begin())];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double n = counts[i];
        for (auto* r : {&out[i].segment, &out[i].event}) {
            r->f1 /= n;
            r->precision /= n;
            r->recall /= n;
            r->error_rate /= n;
        }
    }
    return out;
}

nlohmann::json to_json(const ResultsTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"case", r.case_name},
                        {"setting", r.setting},
                        {"seed", r.seed},
                        {"segment", report_json(r.segment)},
                        {"event", report_json(r.event)}});
    }
    return nlohmann::json{
        {"title", table.title}, {"config_digest", table.config_digest}, {"seeds", table.seeds}, {"rows", rows}};
}

std::string to_csv(const ResultsTable& table) {
    std::string out =
        "case,setting,seed,segment_f1,segment_precision,segment_recall,segment_er,"
        "event_f1,event_precision,event_recall,event_er\n";
    char buf[256];
    for (const auto& r : table.rows) {
        std::snprintf(buf, sizeof(buf), ",%llu,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                      static_cast<unsigned long long>(r.seed), r.segment.f1, r.segment.precision, r.segment.recall,
                      r.segment.error_rate, r.event.f1, r.event.precision, r.event.recall, r.event.error_rate);
        out += r.case_name + "," + (r.setting.find(',') != std::string::npos ? "\"" + r.setting + "\"" : r.setting) +
               buf;
    }
    return out;
}

std::string format_table(const ResultsTable& table, TableLayout layout) {
    const auto rows = mean_rows(table);
    std::string out;
    char buf[256];
    const char* top = layout == TableLayout::scores ? "F1 (%)" : "P (%)";
    const char* second = layout == TableLayout::scores ? "Error rate" : "R (%)";
    std::snprintf(buf, sizeof(buf), "%-24s | %-17s | %-17s\n", "", top, second);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-24s | %8s %8s | %8s %8s\n", "Case", "Segment", "Event", "Segment", "Event");
    out += buf;
    out += std::string(24, '-') + "-+-" + std::string(17, '-') + "-+-" + std::string(17, '-') + "\n";
    for (const auto& r : rows) {
        const std::string name = r.setting.empty() ? r.case_name : r.case_name + " " + r.setting;
        if (layout == TableLayout::scores) {
            std::snprintf(buf, sizeof(buf), "%-24s | %8.2f %8.2f | %8.2f %8.2f\n", name.c_str(), r.segment.f1,
                          r.event.f1, r.segment.error_rate, r.event.error_rate);
        } else {
            std::snprintf(buf, sizeof(buf), "%-24s | %8.2f %8.2f | %8.2f %8.2f\n", name.c_str(), r.segment.precision,
                          r.event.precision, r.segment.recall, r.event.recall);
        }
        out += buf;
    }
    return out;
}

void report(std::span<const ResultsTable> tables, const std::filesystem::path& out_dir) {
    for (const auto& t : tables) {
        const auto base = out_dir / t.title;
        io::write_text(base.string() + ".json", to_json(t).dump(2) + "\n");
        io::write_text(base.string() + ".csv", to_csv(t));
        std::string text = t.title + "  (config " + t.config_digest + ", seeds";
        for (auto s : t.seeds) text += " " + std::to_string(s);
        text += ", mean over seeds)\n\n" + format_table(t, TableLayout::scores) + "\n" +
                format_table(t, TableLayout::precision_recall);
        io::write_text(base.string() + ".txt", text);
    }
}

}  // namespace sedkit::experiments
