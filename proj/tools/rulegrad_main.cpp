// rulegrad: train and evaluate zero-shot visual-semantic embedding models
// regularized by differentiable hypernym/attribute rules.
//
// Subcommands: generate | train | eval | sweep | ablate. Configuration is a
// JSON file with flat dotted keys, every key overridable via --set key=value
// (last one wins). All outputs are machine-readable (JSON / CSV) and
// deterministic given config + seed.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <rulegrad/rulegrad.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rulegrad;

namespace {

// Flat dotted-key configuration with unknown-key detection.
class Config {
public:
    void load_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) kv_[it.key()] = it.value();
    }

    void apply_set(const std::string& assignment) {
        const std::size_t eq = assignment.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("--set expects key=value, got '" + assignment + "'");
        }
        const std::string key = assignment.substr(0, eq);
        const std::string raw = assignment.substr(eq + 1);
        json parsed = json::parse(raw, nullptr, false);
        kv_[key] = parsed.is_discarded() ? json(raw) : parsed;
    }

    void set(const std::string& key, json v) { kv_[key] = std::move(v); }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    double number(const std::string& key, double def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        if (!it->second.is_number()) throw ConfigError("config key '" + key + "' must be a number");
        return it->second.get<double>();
    }

    std::size_t count(const std::string& key, std::size_t def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        if (!it->second.is_number_unsigned() && !it->second.is_number_integer()) {
            throw ConfigError("config key '" + key + "' must be a non-negative integer");
        }
        const auto v = it->second.get<long long>();
        if (v < 0) throw ConfigError("config key '" + key + "' must be >= 0");
        return static_cast<std::size_t>(v);
    }

    bool boolean(const std::string& key, bool def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        if (!it->second.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
        return it->second.get<bool>();
    }

    std::string text(const std::string& key, const std::string& def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        used_.insert(key);
        if (!it->second.is_string()) throw ConfigError("config key '" + key + "' must be a string");
        return it->second.get<std::string>();
    }

    void reject_unknown() const {
        std::vector<std::string> unknown;
        for (const auto& [key, value] : kv_) {
            if (!used_.count(key)) unknown.push_back(key);
        }
        if (!unknown.empty()) {
            std::string msg = "unknown config keys:";
            for (const std::string& k : unknown) msg += " " + k;
            throw ConfigError(msg);
        }
    }

private:
    std::map<std::string, json> kv_;
    mutable std::set<std::string> used_;
};

TrainConfig train_config_from(const Config& cfg) {
    TrainConfig tc;
    tc.gamma = cfg.number("train.gamma", 32.0);
    tc.embed_dim = cfg.count("train.embed_dim", 1024);
    tc.batch_size = cfg.count("train.batch_size", 128);
    tc.epochs = cfg.count("train.epochs", 20);
    tc.learning_rate = cfg.number("train.learning_rate", 1e-3);
    tc.beta1 = cfg.number("train.beta1", 0.9);
    tc.beta2 = cfg.number("train.beta2", 0.999);
    tc.adam_eps = cfg.number("train.adam_eps", 1e-8);
    tc.weight_decay = cfg.number("train.weight_decay", 1e-5);
    tc.transductive = cfg.boolean("train.transductive", false);
    tc.margin_per_step = cfg.boolean("train.margin_per_step", false);
    tc.eval_per_epoch = cfg.boolean("train.eval_per_epoch", true);
    tc.noise_sigma = cfg.number("train.noise_sigma", 0.0);
    tc.seed = static_cast<std::uint64_t>(cfg.count("train.seed", 0));

    tc.weights.lambda_q = cfg.number("loss.lambda_q", 1.0);
    tc.weights.lambda_reg = cfg.number("loss.lambda_reg", 0.0);
    tc.weights.lambda_hyp = cfg.number("loss.lambda_hyp", 1.0);
    tc.weights.lambda_attr = cfg.number("loss.lambda_attr", 1.0);
    tc.weights.lambda_trans = cfg.number("loss.lambda_trans", 1.0);

    tc.margin.c_start = cfg.number("c_start", 14.0);
    tc.margin.c_stop = cfg.number("c_stop", 4.0);
    tc.margin.c_epochs = cfg.count("c_epochs", 10);

    // ablation toggles: a disabled rule family forces its weight to zero
    if (!cfg.boolean("rules.hypernym", true)) tc.weights.lambda_hyp = 0.0;
    if (!cfg.boolean("rules.attribute", true)) tc.weights.lambda_attr = 0.0;
    tc.validate();
    return tc;
}

SyntheticSpec synth_spec_from(const Config& cfg) {
    SyntheticSpec spec;
    spec.hypernyms = cfg.count("synth.hypernyms", spec.hypernyms);
    spec.classes_per_hypernym = cfg.count("synth.classes_per_hypernym", spec.classes_per_hypernym);
    spec.samples_per_class = cfg.count("synth.samples_per_class", spec.samples_per_class);
    spec.test_samples_per_class =
        cfg.count("synth.test_samples_per_class", spec.test_samples_per_class);
    spec.feature_dim = cfg.count("synth.feature_dim", spec.feature_dim);
    spec.embedding_dim = cfg.count("synth.embedding_dim", spec.embedding_dim);
    spec.unseen_per_hypernym = cfg.count("synth.unseen_per_hypernym", spec.unseen_per_hypernym);
    spec.attributes = cfg.count("synth.attributes", spec.attributes);
    spec.noise_sigma = cfg.number("synth.noise_sigma", spec.noise_sigma);
    spec.center_separation = cfg.number("synth.separation", spec.center_separation);
    spec.class_offset = cfg.number("synth.class_offset", spec.class_offset);
    spec.embedding_noise = cfg.number("synth.embedding_noise", spec.embedding_noise);
    spec.seed = static_cast<std::uint64_t>(cfg.count("synth.seed", spec.seed));
    spec.name = cfg.text("synth.name", spec.name);
    spec.validate();
    return spec;
}

std::string csv_escape(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

void write_metrics_csv(const fs::path& path, const std::vector<EpochStats>& log) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch,margin,total,classification,bias,regularizer,hypernym,attribute,"
           "mca_t,mca_s_g,mca_t_g,hm\n";
    for (std::size_t e = 0; e < log.size(); ++e) {
        const EpochStats& s = log[e];
        out << e << ',' << csv_escape(s.margin) << ',' << csv_escape(s.mean_loss.total) << ','
            << csv_escape(s.mean_loss.classification) << ',' << csv_escape(s.mean_loss.bias)
            << ',' << csv_escape(s.mean_loss.regularizer) << ','
            << csv_escape(s.mean_loss.hypernym) << ',' << csv_escape(s.mean_loss.attribute);
        if (s.eval) {
            out << ',' << csv_escape(s.eval->mca_t) << ',' << csv_escape(s.eval->mca_s_g) << ','
                << csv_escape(s.eval->mca_t_g) << ',' << csv_escape(s.eval->hm);
        } else {
            out << ",,,,";
        }
        out << '\n';
    }
}

struct RunOutput {
    TrainResult result;
    EvalReport report;
};

RunOutput run_training(const ZslDataset& ds, const TrainConfig& tc) {
    RunOutput out;
    out.result = train(ds, tc);
    out.report = evaluate(ds, out.result.params, tc.gamma);
    return out;
}

int cmd_generate(const Config& cfg, const fs::path& out_dir) {
    SyntheticSpec spec = synth_spec_from(cfg);
    cfg.reject_unknown();
    ZslDataset ds = generate_synthetic(spec);
    save_dataset(ds, out_dir);
    std::cout << "wrote dataset '" << ds.name << "' to " << out_dir.string() << ": "
              << ds.num_classes() << " classes (" << ds.seen.size() << " seen / "
              << ds.unseen.size() << " unseen), " << ds.train_labels.size()
              << " train / " << ds.test_labels.size() << " test samples, "
              << ds.rules.num_hypernyms() << " hypernyms, " << ds.rules.num_attributes()
              << " attributes\n";
    return 0;
}

int cmd_train(const Config& cfg, const fs::path& out_dir) {
    const std::string data_path = cfg.text("data.path", "");
    if (data_path.empty()) throw ConfigError("data.path is required");
    TrainConfig tc = train_config_from(cfg);
    cfg.reject_unknown();
    ZslDataset ds = load_dataset(data_path);

    RunOutput run = run_training(ds, tc);

    fs::create_directories(out_dir);
    write_metrics_csv(out_dir / "metrics.csv", run.result.log);
    save_params(run.result.params, out_dir);
    std::ofstream report(out_dir / "report.json");
    report << run.report.to_json().dump(2) << "\n";

    std::cout << "dataset=" << ds.name << " epochs=" << tc.epochs
              << " transductive=" << (tc.transductive ? "yes" : "no") << "\n"
              << "mca_t=" << run.report.mca_t << " mca_s_g=" << run.report.mca_s_g
              << " mca_t_g=" << run.report.mca_t_g << " hm=" << run.report.hm << "\n"
              << "wrote " << (out_dir / "metrics.csv").string() << ", "
              << (out_dir / "report.json").string() << ", "
              << (out_dir / "params.json").string() << "\n";
    return 0;
}

int cmd_eval(const Config& cfg, const fs::path& out_dir, const std::string& params_dir) {
    const std::string data_path = cfg.text("data.path", "");
    if (data_path.empty()) throw ConfigError("data.path is required");
    const double gamma = cfg.number("train.gamma", 32.0);
    cfg.reject_unknown();
    if (params_dir.empty()) throw ConfigError("--params is required for eval");
    ZslDataset ds = load_dataset(data_path);
    VseParams params = load_params(params_dir);
    EvalReport report = evaluate(ds, params, gamma);
    const std::string text = report.to_json().dump(2);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "report.json");
        out << text << "\n";
        std::cout << "wrote " << (out_dir / "report.json").string() << "\n";
    }
    std::cout << text << "\n";
    return 0;
}

struct SweepRow {
    double value = 0.0;
    EvalReport report;
    double final_hyp_loss = 0.0;
    double final_attr_loss = 0.0;
};

void apply_axis(TrainConfig& tc, const std::string& axis, double value) {
    if (axis == "c_start") {
        tc.margin.c_start = value;
    } else if (axis == "c_stop") {
        tc.margin.c_stop = value;
    } else if (axis == "c_epochs") {
        if (value < 1.0) throw ConfigError("c_epochs must be >= 1");
        tc.margin.c_epochs = static_cast<std::size_t>(value);
    } else if (axis == "lambda_hyp") {
        tc.weights.lambda_hyp = value;
    } else if (axis == "lambda_attr") {
        tc.weights.lambda_attr = value;
    } else {
        throw ConfigError("unknown sweep axis '" + axis +
                          "'; valid axes: c_start c_stop c_epochs lambda_hyp lambda_attr");
    }
}

int cmd_sweep(const Config& cfg, const fs::path& out_dir, const std::string& axis,
              const std::vector<double>& values, std::size_t jobs) {
    const std::string data_path = cfg.text("data.path", "");
    if (data_path.empty()) throw ConfigError("data.path is required");
    TrainConfig base = train_config_from(cfg);
    cfg.reject_unknown();
    if (values.empty()) throw ConfigError("sweep needs at least one --values entry");
    {
        TrainConfig probe = base; // fail fast on a bad axis before training
        apply_axis(probe, axis, values.front());
    }
    ZslDataset ds = load_dataset(data_path);

    std::vector<SweepRow> rows(values.size());
    std::vector<std::string> errors(values.size());
    std::size_t workers = std::max<std::size_t>(1, std::min(jobs, values.size()));
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    auto work = [&]() {
        while (true) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= values.size()) return;
                i = next++;
            }
            try {
                TrainConfig tc = base;
                tc.eval_per_epoch = false;
                apply_axis(tc, axis, values[i]);
                RunOutput run = run_training(ds, tc);
                rows[i].value = values[i];
                rows[i].report = run.report;
                rows[i].final_hyp_loss = run.result.log.back().mean_loss.hypernym;
                rows[i].final_attr_loss = run.result.log.back().mean_loss.attribute;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) {
            throw ConfigError("sweep row " + std::to_string(i) + " (value " +
                              std::to_string(values[i]) + ") failed: " + errors[i]);
        }
    }

    std::ostringstream csv;
    csv << axis << ",mca_t,mca_s_g,mca_t_g,hm,final_hypernym_loss,final_attribute_loss\n";
    for (const SweepRow& row : rows) {
        csv << csv_escape(row.value) << ',' << csv_escape(row.report.mca_t) << ','
            << csv_escape(row.report.mca_s_g) << ',' << csv_escape(row.report.mca_t_g) << ','
            << csv_escape(row.report.hm) << ',' << csv_escape(row.final_hyp_loss) << ','
            << csv_escape(row.final_attr_loss) << '\n';
    }
    std::cout << csv.str();
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "sweep.csv");
        out << csv.str();
        std::cout << "wrote " << (out_dir / "sweep.csv").string() << "\n";
    }
    return 0;
}

int cmd_ablate(const Config& cfg, const fs::path& out_dir) {
    const std::string data_path = cfg.text("data.path", "");
    if (data_path.empty()) throw ConfigError("data.path is required");
    TrainConfig base = train_config_from(cfg);
    cfg.reject_unknown();
    ZslDataset ds = load_dataset(data_path);

    struct Row {
        bool hyp, attr, trans;
        EvalReport report;
    };
    std::vector<Row> rows;
    for (bool trans : {false, true}) {
        for (auto [hyp, attr] : std::vector<std::pair<bool, bool>>{
                 {false, false}, {false, true}, {true, false}, {true, true}}) {
            TrainConfig tc = base;
            tc.eval_per_epoch = false;
            tc.transductive = trans;
            if (!hyp) tc.weights.lambda_hyp = 0.0;
            if (!attr) tc.weights.lambda_attr = 0.0;
            RunOutput run = run_training(ds, tc);
            rows.push_back({hyp, attr, trans, run.report});
        }
    }

    std::ostringstream csv;
    csv << "hypernym_rules,attribute_rules,transductive,mca_t,hm\n";
    for (const Row& r : rows) {
        csv << (r.hyp ? 1 : 0) << ',' << (r.attr ? 1 : 0) << ',' << (r.trans ? 1 : 0) << ','
            << csv_escape(r.report.mca_t) << ',' << csv_escape(r.report.hm) << '\n';
    }
    std::cout << csv.str();
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir / "ablate.csv");
        out << csv.str();
        std::cout << "wrote " << (out_dir / "ablate.csv").string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-shot VSE training with differentiable rule losses"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    std::int64_t seed = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (flat dotted keys)");
        sub->add_option("--set", sets, "override a config key, e.g. --set train.epochs=30")
            ->take_all();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override train.seed / synth.seed");
    };

    CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset");
    add_common(generate);

    CLI::App* train_cmd = app.add_subcommand("train", "train and evaluate one configuration");
    add_common(train_cmd);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate saved parameters");
    std::string params_dir;
    add_common(eval_cmd);
    eval_cmd->add_option("--params", params_dir, "directory holding params.json");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "train once per value along one axis");
    std::string axis;
    std::vector<double> values;
    std::size_t jobs = 1;
    add_common(sweep_cmd);
    sweep_cmd->add_option("--axis", axis,
                          "one of: c_start c_stop c_epochs lambda_hyp lambda_attr")
        ->required();
    sweep_cmd->add_option("--values", values, "comma-separated list of axis values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--jobs", jobs, "parallel training rows");

    CLI::App* ablate_cmd =
        app.add_subcommand("ablate", "run the rules x transductive ablation grid");
    add_common(ablate_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg;
        if (!config_path.empty()) cfg.load_file(config_path);
        for (const std::string& s : sets) cfg.apply_set(s);
        if (seed >= 0) {
            cfg.set(generate->parsed() ? "synth.seed" : "train.seed",
                    static_cast<std::uint64_t>(seed));
        }

        if (generate->parsed()) {
            if (out_dir.empty()) throw ConfigError("generate needs --out DIR");
            return cmd_generate(cfg, out_dir);
        }
        if (train_cmd->parsed()) {
            if (out_dir.empty()) throw ConfigError("train needs --out DIR");
            return cmd_train(cfg, out_dir);
        }
        if (eval_cmd->parsed()) return cmd_eval(cfg, out_dir, params_dir);
        if (sweep_cmd->parsed()) return cmd_sweep(cfg, out_dir, axis, values, jobs);
        if (ablate_cmd->parsed()) return cmd_ablate(cfg, out_dir);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ContractError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
