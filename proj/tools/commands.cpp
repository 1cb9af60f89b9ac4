#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "har/attributes.hpp"
#include "har/data.hpp"
#include "har/digest.hpp"
#include "har/errors.hpp"
#include "har/evolution.hpp"
#include "har/format.hpp"
#include "har/log.hpp"
#include "har/models.hpp"
#include "har/training.hpp"
#include "har/version.hpp"

namespace har::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file: " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void check_schema_version(const json& j, const fs::path& origin) {
    const int version = j.value("version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion) {
        throw ValidationError("unsupported config version " + std::to_string(version) + " in " +
                              origin.string());
    }
}

/// A config section comes from its own file or from the named section of
/// the --config bundle. Tracks the origin path for relative-path
/// resolution and manifest digests.
struct Section {
    json content;
    fs::path origin;
};

Section resolve_section(const std::optional<fs::path>& own_file,
                        const std::optional<fs::path>& bundle, const char* key) {
    if (own_file) {
        json j = load_json_file(*own_file);
        check_schema_version(j, *own_file);
        return {std::move(j), *own_file};
    }
    if (bundle) {
        json all = load_json_file(*bundle);
        check_schema_version(all, *bundle);
        if (!all.contains(key)) {
            throw ValidationError("config bundle " + bundle->string() +
                                  " has no section '" + std::string(key) + "'");
        }
        return {all.at(key), *bundle};
    }
    throw ValidationError("missing configuration: pass --" + std::string(key) +
                          " or a --config bundle with a '" + std::string(key) + "' section");
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Reproducibility record written by every command.
struct ManifestBuilder {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::map<std::string, std::string> inputs;
    std::vector<std::string> outputs;

    void add_input(const fs::path& path) { inputs[path.string()] = digest_file(path); }
    void add_output(const fs::path& path) { outputs.push_back(path.string()); }

    void write(const fs::path& path) const {
        json in = json::object();
        for (const auto& [p, d] : inputs) in[p] = d;
        json j{{"version", kConfigSchemaVersion},
               {"artifact_version", kVersion},
               {"command", command},
               {"seed", seed},
               {"config_digest", config_digest},
               {"inputs", std::move(in)},
               {"outputs", outputs}};
        write_text_file(path, j.dump(2) + "\n");
    }
};

void apply_global(const GlobalArgs& global) { log::set_level(global.log_level); }

nn::NetworkConfig network_config_for(const Section& network_section,
                                     const data::DatasetConfig& dataset) {
    nn::NetworkConfig netcfg = nn::NetworkConfig::from_json(network_section.content);
    netcfg.window_length = dataset.window_length;
    netcfg.channel_count = dataset.channels.size();
    if (netcfg.architecture == nn::Architecture::attr_cnn_imu && netcfg.imu_groups.empty()) {
        netcfg.imu_groups = dataset.group_indices();
        if (netcfg.imu_groups.empty()) {
            throw ValidationError(
                "attrCNN-IMU needs IMU groups in the dataset or network config");
        }
    }
    netcfg.validate();
    return netcfg;
}

void check_attribute_capacity(std::size_t class_count, std::size_t attribute_count) {
    // 2^n - 1 distinct non-zero rows must cover K classes.
    if (attribute_count < 64 &&
        ((std::uint64_t{1} << attribute_count) - 1) < class_count) {
        throw ValidationError("num_attributes " + std::to_string(attribute_count) +
                              " is too small for " + std::to_string(class_count) +
                              " distinct classes");
    }
}

Metrics run_one_training(const data::DatasetConfig& dataset, const nn::NetworkConfig& netcfg,
                         const AttributeMatrix& attributes, TrainConfig train_cfg,
                         std::size_t threads, const fs::path& out_dir) {
    // Final training uses train+validation together; normalization
    // statistics are computed over that combined material.
    data::DatasetConfig combined = dataset;
    auto train_files = combined.splits.count("train") ? combined.splits.at("train")
                                                      : std::vector<fs::path>{};
    if (combined.splits.count("validation")) {
        const auto& extra = combined.splits.at("validation");
        train_files.insert(train_files.end(), extra.begin(), extra.end());
    }
    combined.splits["train"] = std::move(train_files);

    const data::WindowedDataset train_set = data::load_split(combined, "train");
    const data::WindowedDataset test_set =
        data::load_split(combined, "test", train_set.stats);

    nn::Network net = nn::build_network(netcfg, train_cfg.seed);
    const TrainResult result = train(net, train_set, attributes, train_cfg);

    // Checkpoint, with normalization statistics attached so eval runs are
    // self-contained.
    json ckpt = net.checkpoint();
    ckpt["normalization"] = {{"min", train_set.stats.channel_min},
                             {"max", train_set.stats.channel_max}};
    write_text_file(out_dir / "checkpoint.json", ckpt.dump(2) + "\n");

    std::string loss_csv = "epoch,mean_bce\n";
    for (std::size_t e = 0; e < result.loss_curve.size(); ++e) {
        loss_csv += std::to_string(e) + "," + format_double(result.loss_curve[e]) + "\n";
    }
    write_text_file(out_dir / "loss_curve.csv", loss_csv);

    const Metrics metrics = evaluate(net, test_set, attributes, threads);
    json mj = metrics.to_json();
    mj["version"] = kConfigSchemaVersion;
    mj["split"] = "test";
    mj["attributes"] = attributes.to_json();
    write_text_file(out_dir / "metrics.json", mj.dump(2) + "\n");
    return metrics;
}

}  // namespace

int cmd_synth(const SynthArgs& args) {
    apply_global(args.global);
    const Section section = resolve_section(args.spec, args.global.config, "synth");
    data::SynthSpec spec = data::SynthSpec::from_json(section.content);
    if (args.global.seed != 0) spec.seed = args.global.seed;

    const data::RawRecording rec = data::synth_generate(spec);
    data::write_recording_csv(rec, args.out_csv);

    ManifestBuilder manifest;
    manifest.command = "synth";
    manifest.seed = spec.seed;
    manifest.config_digest = digest_string(spec.to_json().dump());
    manifest.add_input(section.origin);
    manifest.add_output(args.out_csv);
    manifest.write(args.out_csv.string() + ".manifest.json");

    log::info("wrote " + args.out_csv.string() + " (" + std::to_string(rec.length()) +
              " samples, " + std::to_string(rec.channels()) + " channels)");
    return 0;
}

int cmd_evolve(const EvolveArgs& args) {
    apply_global(args.global);
    const Section ds_section = resolve_section(args.dataset, args.global.config, "dataset");
    const Section net_section = resolve_section(args.network, args.global.config, "network");
    const Section evo_section = resolve_section(args.evolution, args.global.config, "evolution");

    const data::DatasetConfig dataset =
        data::DatasetConfig::from_json(ds_section.content, ds_section.origin.parent_path());
    nn::NetworkConfig netcfg = network_config_for(net_section, dataset);

    EvolutionConfig evo = EvolutionConfig::from_json(evo_section.content);
    // an explicit dropout rate on the inner train config wins over the
    // network default
    if (evo_section.content.contains("train") &&
        evo_section.content.at("train").contains("dropout_rate")) {
        netcfg.dropout_rate = evo.train.dropout_rate;
        netcfg.validate();
    }
    evo.class_count = dataset.num_classes;
    evo.attribute_count = netcfg.attribute_count;
    evo.base_seed = args.global.seed;
    evo.threads = args.global.threads;
    check_attribute_capacity(evo.class_count, evo.attribute_count);
    evo.validate();

    fs::create_directories(args.out_dir);
    const data::WindowedDataset train_set = data::load_split(dataset, "train");
    const data::WindowedDataset val_set =
        data::load_split(dataset, "validation", train_set.stats);

    const EvolutionResult result =
        args.resume ? resume(args.out_dir, evo, netcfg, train_set, val_set)
                    : evolve(evo, netcfg, train_set, val_set, args.out_dir);

    const fs::path best_path = args.out_dir / "best_attributes.csv";
    result.best.save_csv(best_path);

    ManifestBuilder manifest;
    manifest.command = "evolve";
    manifest.seed = evo.base_seed;
    manifest.config_digest = evolution_config_digest(evo, netcfg);
    manifest.add_input(ds_section.origin);
    manifest.add_input(net_section.origin);
    manifest.add_input(evo_section.origin);
    for (const auto& [split, files] : dataset.splits) {
        if (split == "train" || split == "validation") {
            for (const auto& f : files) manifest.add_input(f);
        }
    }
    manifest.add_output(args.out_dir / "fitness_history.csv");
    manifest.add_output(best_path);
    manifest.add_output(args.out_dir / "state.json");
    manifest.write(args.out_dir / "manifest.json");

    log::info("best validation weighted F1 " + format_double(result.best_f1) + " after " +
              std::to_string(result.history.size()) + " generations");
    return 0;
}

int cmd_train_final(const TrainFinalArgs& args) {
    apply_global(args.global);
    const Section ds_section = resolve_section(args.dataset, args.global.config, "dataset");
    const Section net_section = resolve_section(args.network, args.global.config, "network");
    const Section train_section = resolve_section(args.train, args.global.config, "train");

    const data::DatasetConfig dataset =
        data::DatasetConfig::from_json(ds_section.content, ds_section.origin.parent_path());
    nn::NetworkConfig netcfg = network_config_for(net_section, dataset);
    TrainConfig train_cfg = TrainConfig::from_json(train_section.content);
    if (train_section.content.contains("dropout_rate")) {
        netcfg.dropout_rate = train_cfg.dropout_rate;
        netcfg.validate();
    }

    const bool random_attributes = args.attributes == "random";
    if (args.trials < 1) throw ValidationError("--trials must be >= 1");
    if (!random_attributes && args.trials != 1) {
        throw ValidationError("--trials > 1 requires --attributes random");
    }

    std::optional<AttributeMatrix> fixed;
    if (!random_attributes) {
        const fs::path path(args.attributes);
        if (!fs::exists(path)) {
            throw ValidationError("attributes file does not exist: " + path.string());
        }
        fixed = AttributeMatrix::load_csv(path);
        if (fixed->class_count() != dataset.num_classes) {
            throw ValidationError("attributes file has " +
                                  std::to_string(fixed->class_count()) + " classes, dataset has " +
                                  std::to_string(dataset.num_classes));
        }
        if (fixed->attribute_count() != netcfg.attribute_count) {
            throw ValidationError("attributes file has " +
                                  std::to_string(fixed->attribute_count()) +
                                  " attributes, network expects " +
                                  std::to_string(netcfg.attribute_count));
        }
    } else {
        check_attribute_capacity(dataset.num_classes, netcfg.attribute_count);
    }

    fs::create_directories(args.out_dir);

    std::vector<double> trial_f1;
    for (std::size_t trial = 0; trial < args.trials; ++trial) {
        const fs::path trial_dir =
            args.trials == 1 ? args.out_dir : args.out_dir / ("trial_" + std::to_string(trial));
        fs::create_directories(trial_dir);

        AttributeMatrix attributes = [&]() {
            if (fixed) return *fixed;
            RngState rng = RngState::derive(args.global.seed, "random-attributes", trial);
            return random_representation(dataset.num_classes, netcfg.attribute_count, rng);
        }();
        attributes.save_csv(trial_dir / "attributes.csv");

        TrainConfig cfg = train_cfg;
        cfg.seed = args.global.seed + trial;
        const Metrics metrics =
            run_one_training(dataset, netcfg, attributes, cfg, args.global.threads, trial_dir);
        trial_f1.push_back(metrics.weighted_f1);
        log::info("trial " + std::to_string(trial) + ": test weighted F1 " +
                  format_double(metrics.weighted_f1));
    }

    json summary{{"version", kConfigSchemaVersion},
                 {"trials", args.trials},
                 {"attributes", random_attributes ? "random" : args.attributes},
                 {"test_weighted_f1", trial_f1}};
    if (args.trials > 1) {
        double mean = 0.0;
        for (double v : trial_f1) mean += v;
        mean /= static_cast<double>(trial_f1.size());
        double var = 0.0;
        for (double v : trial_f1) var += (v - mean) * (v - mean);
        var /= static_cast<double>(trial_f1.size());
        summary["mean_f1"] = mean;
        summary["std_f1"] = std::sqrt(var);
    }
    write_text_file(args.out_dir / "summary.json", summary.dump(2) + "\n");

    ManifestBuilder manifest;
    manifest.command = "train-final";
    manifest.seed = args.global.seed;
    manifest.config_digest = digest_string(
        json{{"network", netcfg.to_json()}, {"train", train_cfg.to_json()}}.dump());
    manifest.add_input(ds_section.origin);
    manifest.add_input(net_section.origin);
    manifest.add_input(train_section.origin);
    if (!random_attributes) manifest.add_input(fs::path(args.attributes));
    for (const auto& [split, files] : dataset.splits) {
        for (const auto& f : files) manifest.add_input(f);
    }
    manifest.add_output(args.out_dir / "summary.json");
    manifest.write(args.out_dir / "manifest.json");
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    apply_global(args.global);
    const Section ds_section = resolve_section(args.dataset, args.global.config, "dataset");
    const data::DatasetConfig dataset =
        data::DatasetConfig::from_json(ds_section.content, ds_section.origin.parent_path());

    const json ckpt = load_json_file(args.checkpoint);
    const nn::Network net = nn::network_from_checkpoint(ckpt);
    const AttributeMatrix attributes = AttributeMatrix::load_csv(args.attributes);
    if (attributes.attribute_count() != net.config().attribute_count) {
        throw ValidationError("attributes file and checkpoint disagree on attribute count");
    }

    std::optional<data::NormalizationStats> stats;
    if (ckpt.contains("normalization")) {
        data::NormalizationStats s;
        s.channel_min = ckpt.at("normalization").at("min").get<std::vector<double>>();
        s.channel_max = ckpt.at("normalization").at("max").get<std::vector<double>>();
        stats = std::move(s);
    } else {
        log::warn("checkpoint has no normalization statistics; recomputing from train split");
        stats = data::load_split(dataset, "train").stats;
    }

    const data::WindowedDataset ds = data::load_split(dataset, args.split, stats);
    const Metrics metrics = evaluate(net, ds, attributes, args.global.threads);

    json mj = metrics.to_json();
    mj["version"] = kConfigSchemaVersion;
    mj["split"] = args.split;
    mj["attributes"] = attributes.to_json();
    const std::string text = mj.dump(2) + "\n";
    std::cout << text;

    fs::create_directories(args.out_dir);
    write_text_file(args.out_dir / "metrics.json", text);

    ManifestBuilder manifest;
    manifest.command = "eval";
    manifest.seed = args.global.seed;
    manifest.config_digest = digest_string(net.config().to_json().dump());
    manifest.add_input(ds_section.origin);
    manifest.add_input(args.checkpoint);
    manifest.add_input(args.attributes);
    if (dataset.splits.count(args.split)) {
        for (const auto& f : dataset.splits.at(args.split)) manifest.add_input(f);
    }
    manifest.add_output(args.out_dir / "metrics.json");
    manifest.write(args.out_dir / "manifest.json");
    return 0;
}

int cmd_inspect(const InspectArgs& args) {
    apply_global(args.global);
    const RawAttributeBits raw = load_attribute_csv_raw(args.attributes);
    const auto violations =
        attribute_matrix_violations(raw.class_count, raw.attribute_count, raw.bits);

    const std::size_t K = raw.class_count, n = raw.attribute_count;
    json popcounts = json::array();
    for (std::size_t k = 0; k < K; ++k) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) count += raw.bits[k * n + i];
        popcounts.push_back(count);
    }
    json shared = json::array();
    for (std::size_t a = 0; a < K; ++a) {
        json row = json::array();
        for (std::size_t b = 0; b < K; ++b) {
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                count += raw.bits[a * n + i] & raw.bits[b * n + i];
            }
            row.push_back(count);
        }
        shared.push_back(std::move(row));
    }

    json report{{"version", kConfigSchemaVersion},
                {"classes", K},
                {"attributes", n},
                {"row_popcounts", std::move(popcounts)},
                {"shared_attribute_counts", std::move(shared)},
                {"violations", violations}};
    const std::string text = report.dump(2) + "\n";
    std::cout << text;

    if (args.out_dir) {
        fs::create_directories(*args.out_dir);
        write_text_file(*args.out_dir / "report.json", text);
        ManifestBuilder manifest;
        manifest.command = "inspect";
        manifest.seed = args.global.seed;
        manifest.config_digest = digest_string(text);
        manifest.add_input(args.attributes);
        manifest.add_output(*args.out_dir / "report.json");
        manifest.write(*args.out_dir / "manifest.json");
    }
    return violations.empty() ? 0 : 1;
}

}  // namespace har::cli
