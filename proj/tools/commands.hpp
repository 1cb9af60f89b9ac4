#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace har::cli {

struct GlobalArgs {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string log_level = "info";
    std::optional<std::filesystem::path> config;  // bundle with named sections
};

struct SynthArgs {
    GlobalArgs global;
    std::optional<std::filesystem::path> spec;  // falls back to bundle section "synth"
    std::filesystem::path out_csv;
};

struct EvolveArgs {
    GlobalArgs global;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> network;
    std::optional<std::filesystem::path> evolution;
    std::filesystem::path out_dir;
    bool resume = false;
};

struct TrainFinalArgs {
    GlobalArgs global;
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> network;
    std::optional<std::filesystem::path> train;
    std::string attributes;  // path to a matrix CSV, or "random"
    std::size_t trials = 1;
    std::filesystem::path out_dir;
};

struct EvalArgs {
    GlobalArgs global;
    std::optional<std::filesystem::path> dataset;
    std::filesystem::path checkpoint;
    std::filesystem::path attributes;
    std::string split = "test";
    std::filesystem::path out_dir;
};

struct InspectArgs {
    GlobalArgs global;
    std::filesystem::path attributes;
    std::optional<std::filesystem::path> out_dir;
};

// Each command returns a process exit code (0 success, 1 validation
// error already reported). Unexpected failures propagate as exceptions.
int cmd_synth(const SynthArgs& args);
int cmd_evolve(const EvolveArgs& args);
int cmd_train_final(const TrainFinalArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_inspect(const InspectArgs& args);

}  // namespace har::cli
