#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "har/errors.hpp"
#include "har/log.hpp"
#include "har/version.hpp"

namespace {

void add_global_options(CLI::App& app, har::cli::GlobalArgs& global) {
    app.add_option("--seed", global.seed, "Base random seed")->capture_default_str();
    app.add_option("--threads", global.threads, "Worker threads for evaluation")
        ->capture_default_str();
    app.add_option("--log-level", global.log_level, "debug|info|warn|error")
        ->capture_default_str();
    app.add_option("--config", global.config,
                   "Config bundle with dataset/network/evolution/train/synth sections");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Binary attribute representations for activity recognition: "
                 "evolutionary search over attribute matrices with "
                 "temporal-convolution networks"};
    app.set_version_flag("--version", har::kVersion);
    app.require_subcommand(1);

    har::cli::SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled recording CSV");
    add_global_options(*synth, synth_args.global);
    synth->add_option("--spec", synth_args.spec, "Synthetic spec JSON");
    synth->add_option("--out", synth_args.out_csv, "Output CSV path")->required();

    har::cli::EvolveArgs evolve_args;
    auto* evolve = app.add_subcommand("evolve", "Search for an attribute matrix");
    add_global_options(*evolve, evolve_args.global);
    evolve->add_option("--data", evolve_args.dataset, "Dataset config JSON");
    evolve->add_option("--network", evolve_args.network, "Network config JSON");
    evolve->add_option("--evolution", evolve_args.evolution, "Evolution config JSON");
    evolve->add_option("--out", evolve_args.out_dir, "Output directory")->required();
    evolve->add_flag("--resume", evolve_args.resume, "Continue a persisted run in --out");

    har::cli::TrainFinalArgs train_args;
    auto* train_final =
        app.add_subcommand("train-final", "Train on train+validation, evaluate on test");
    add_global_options(*train_final, train_args.global);
    train_final->add_option("--data", train_args.dataset, "Dataset config JSON");
    train_final->add_option("--network", train_args.network, "Network config JSON");
    train_final->add_option("--train", train_args.train, "Train config JSON");
    train_final
        ->add_option("--attributes", train_args.attributes,
                     "Attribute matrix CSV, or 'random'")
        ->required();
    train_final->add_option("--trials", train_args.trials,
                            "Independent runs for random attributes")
        ->capture_default_str();
    train_final->add_option("--out", train_args.out_dir, "Output directory")->required();

    har::cli::EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    add_global_options(*eval, eval_args.global);
    eval->add_option("--data", eval_args.dataset, "Dataset config JSON");
    eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint JSON")->required();
    eval->add_option("--attributes", eval_args.attributes, "Attribute matrix CSV")->required();
    eval->add_option("--split", eval_args.split, "Dataset split")->capture_default_str();
    eval->add_option("--out", eval_args.out_dir, "Output directory")->required();

    har::cli::InspectArgs inspect_args;
    auto* inspect = app.add_subcommand("inspect", "Report on an attribute matrix CSV");
    add_global_options(*inspect, inspect_args.global);
    inspect->add_option("--attributes", inspect_args.attributes, "Attribute matrix CSV")
        ->required();
    inspect->add_option("--out", inspect_args.out_dir, "Optional report directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return har::cli::cmd_synth(synth_args);
        if (evolve->parsed()) return har::cli::cmd_evolve(evolve_args);
        if (train_final->parsed()) return har::cli::cmd_train_final(train_args);
        if (eval->parsed()) return har::cli::cmd_eval(eval_args);
        if (inspect->parsed()) return har::cli::cmd_inspect(inspect_args);
    } catch (const har::ValidationError& e) {
        har::log::error(e.what());
        return 1;
    } catch (const std::exception& e) {
        har::log::error(e.what());
        return 2;
    }
    return 1;
}
