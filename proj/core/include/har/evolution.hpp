#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "har/attributes.hpp"
#include "har/data.hpp"
#include "har/network.hpp"
#include "har/training.hpp"

namespace har {

struct EvolutionConfig {
    std::size_t generations = 1;      // niter
    std::size_t class_count = 0;      // K
    std::size_t attribute_count = 0;  // n
    MutationConfig mutation;
    TrainConfig train;   // per-generation inner training (epochs included)
    bool elitist = false;  // mutate the best matrix instead of the current one
    std::uint64_t base_seed = 0;
    std::size_t threads = 1;

    void validate() const;

    nlohmann::json to_json() const;
    /// Reads generations/mutation/train/elitist; K, n, seed and threads are
    /// wired in by the caller.
    static EvolutionConfig from_json(const nlohmann::json& j);
};

struct FitnessRecord {
    std::size_t generation = 0;
    double f1 = 0.0;
    double best_f1 = 0.0;
    std::string matrix_digest;
    double seconds = 0.0;
    std::string init_digest;  // network initialization digest; not in the CSV
};

struct EvolutionResult {
    AttributeMatrix best;
    double best_f1 = 0.0;
    std::vector<FitnessRecord> history;
    std::size_t generations_run = 0;  // generations executed by this call
};

/// Digest binding a persisted evolution state to its configuration.
std::string evolution_config_digest(const EvolutionConfig& cfg,
                                    const nn::NetworkConfig& netcfg);

/// The mutate/train/validate/keep-best loop over attribute matrices.
///
/// Each generation trains a freshly initialized network (seed
/// base_seed + generation) on the current matrix, scores validation
/// weighted F1, keeps the matrix on strict improvement, then mutates.
/// When `state_dir` is given, state and history are flushed there every
/// generation (enabling resume); errors abort with the partial history
/// persisted.
EvolutionResult evolve(const EvolutionConfig& cfg, const nn::NetworkConfig& netcfg,
                       const data::WindowedDataset& train_set,
                       const data::WindowedDataset& validation_set,
                       const std::optional<std::filesystem::path>& state_dir = std::nullopt);

/// Continues a persisted run to cfg.generations. The final result is
/// identical to an uninterrupted run with the same seed schedule; a
/// completed run returns its stored result without training.
EvolutionResult resume(const std::filesystem::path& state_dir, const EvolutionConfig& cfg,
                       const nn::NetworkConfig& netcfg, const data::WindowedDataset& train_set,
                       const data::WindowedDataset& validation_set);

/// "generation,f1,best_f1,matrix_digest,seconds" rows.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<FitnessRecord>& history);

}  // namespace har
