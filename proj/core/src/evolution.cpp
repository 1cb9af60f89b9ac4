#include "har/evolution.hpp"

#include <chrono>
#include <fstream>

#include "har/digest.hpp"
#include "har/errors.hpp"
#include "har/format.hpp"
#include "har/log.hpp"
#include "har/models.hpp"
#include "har/version.hpp"

namespace har {

namespace {

constexpr const char* kStateFile = "state.json";
constexpr const char* kHistoryFile = "fitness_history.csv";

struct EvolutionState {
    std::string config_digest;
    std::size_t next_generation = 0;
    double best_f1 = 0.0;
    std::optional<AttributeMatrix> a_gen;
    std::optional<AttributeMatrix> a_best;
    bool completed = false;
    std::vector<FitnessRecord> history;
};

nlohmann::json record_to_json(const FitnessRecord& r) {
    return nlohmann::json{{"generation", r.generation},   {"f1", r.f1},
                          {"best_f1", r.best_f1},         {"matrix_digest", r.matrix_digest},
                          {"seconds", r.seconds},         {"init_digest", r.init_digest}};
}

FitnessRecord record_from_json(const nlohmann::json& j) {
    FitnessRecord r;
    r.generation = j.at("generation").get<std::size_t>();
    r.f1 = j.at("f1").get<double>();
    r.best_f1 = j.at("best_f1").get<double>();
    r.matrix_digest = j.at("matrix_digest").get<std::string>();
    r.seconds = j.at("seconds").get<double>();
    r.init_digest = j.value("init_digest", std::string{});
    return r;
}

void save_state(const std::filesystem::path& dir, const EvolutionState& state) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& r : state.history) history.push_back(record_to_json(r));
    nlohmann::json j{{"version", kConfigSchemaVersion},
                     {"config_digest", state.config_digest},
                     {"next_generation", state.next_generation},
                     {"best_f1", state.best_f1},
                     {"a_gen", state.a_gen ? state.a_gen->to_json() : nlohmann::json()},
                     {"a_best", state.a_best ? state.a_best->to_json() : nlohmann::json()},
                     {"completed", state.completed},
                     {"history", std::move(history)}};
    std::ofstream out(dir / kStateFile);
    if (!out) throw std::runtime_error("cannot write evolution state in " + dir.string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing evolution state in " + dir.string());
    write_history_csv(dir / kHistoryFile, state.history);
}

EvolutionState load_state(const std::filesystem::path& dir) {
    const auto path = dir / kStateFile;
    std::ifstream in(path);
    if (!in) throw ValidationError("no evolution state at " + path.string());
    nlohmann::json j;
    try {
        in >> j;
        EvolutionState state;
        state.config_digest = j.at("config_digest").get<std::string>();
        state.next_generation = j.at("next_generation").get<std::size_t>();
        state.best_f1 = j.at("best_f1").get<double>();
        if (!j.at("a_gen").is_null()) state.a_gen = AttributeMatrix::from_json(j.at("a_gen"));
        if (!j.at("a_best").is_null()) state.a_best = AttributeMatrix::from_json(j.at("a_best"));
        state.completed = j.at("completed").get<bool>();
        for (const auto& r : j.at("history")) state.history.push_back(record_from_json(r));
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("corrupt evolution state " + path.string() + ": " + e.what());
    }
}

EvolutionResult run_loop(const EvolutionConfig& cfg, const nn::NetworkConfig& netcfg,
                         const data::WindowedDataset& train_set,
                         const data::WindowedDataset& validation_set, EvolutionState state,
                         const std::optional<std::filesystem::path>& state_dir) {
    if (!state.a_gen.has_value()) {
        RngState init_rng = RngState::derive(cfg.base_seed, "attr-init", 0);
        state.a_gen = random_representation(cfg.class_count, cfg.attribute_count, init_rng);
        // Fallback result for runs whose F1 never exceeds 0.
        if (!state.a_best.has_value()) state.a_best = state.a_gen;
    }

    nn::NetworkConfig gen_netcfg = netcfg;
    gen_netcfg.attribute_count = cfg.attribute_count;

    std::size_t executed = 0;
    auto flush = [&]() {
        if (state_dir) save_state(*state_dir, state);
    };

    try {
        for (std::size_t g = state.next_generation; g < cfg.generations; ++g) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::uint64_t gen_seed = cfg.base_seed + g;

            nn::Network net = nn::build_network(gen_netcfg, gen_seed);
            FitnessRecord record;
            record.generation = g;
            record.init_digest = net.parameter_digest();
            record.matrix_digest = state.a_gen->digest();

            TrainConfig train_cfg = cfg.train;
            train_cfg.seed = gen_seed;
            train(net, train_set, *state.a_gen, train_cfg);

            const Metrics m = evaluate(net, validation_set, *state.a_gen, cfg.threads);
            record.f1 = m.weighted_f1;
            if (m.weighted_f1 > state.best_f1) {
                state.best_f1 = m.weighted_f1;
                state.a_best = state.a_gen;
            }
            record.best_f1 = state.best_f1;

            RngState mut_rng = RngState::derive(cfg.base_seed, "mutate", g);
            state.a_gen = mutate(cfg.elitist ? *state.a_best : *state.a_gen, cfg.mutation,
                                 mut_rng);

            record.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            state.history.push_back(record);
            state.next_generation = g + 1;
            ++executed;
            log::info("generation " + std::to_string(g) + ": f1=" + format_double(record.f1) +
                      " best=" + format_double(record.best_f1));
            flush();
        }
    } catch (...) {
        flush();
        throw;
    }

    state.completed = true;
    flush();

    EvolutionResult result{*state.a_best, state.best_f1, std::move(state.history), executed};
    return result;
}

}  // namespace

void EvolutionConfig::validate() const {
    if (generations < 1) throw ValidationError("evolution: niter must be >= 1");
    if (class_count < 2) throw ValidationError("evolution: class count must be >= 2");
    if (attribute_count < 1) throw ValidationError("evolution: attribute count must be >= 1");
    mutation.validate(attribute_count);
    train.validate();
}

nlohmann::json EvolutionConfig::to_json() const {
    return nlohmann::json{
        {"generations", generations},
        {"class_count", class_count},
        {"num_attributes", attribute_count},
        {"mutation",
         {{"flip_probability", mutation.flip_probability},
          {"scope",
           mutation.scope == MutationConfig::Scope::one_row ? "one-row" : "all-rows"}}},
        {"train", train.to_json()},
        {"elitist", elitist},
        {"base_seed", base_seed}};
}

EvolutionConfig EvolutionConfig::from_json(const nlohmann::json& j) {
    EvolutionConfig cfg;
    try {
        cfg.generations = j.at("generations").get<std::size_t>();
        if (j.contains("mutation")) {
            const auto& m = j.at("mutation");
            cfg.mutation.flip_probability = m.value("flip_probability", 0.0);
            const std::string scope = m.value("scope", std::string{"one-row"});
            if (scope == "one-row") {
                cfg.mutation.scope = MutationConfig::Scope::one_row;
            } else if (scope == "all-rows") {
                cfg.mutation.scope = MutationConfig::Scope::all_rows;
            } else {
                throw ValidationError("evolution: unknown mutation scope '" + scope + "'");
            }
        }
        cfg.train = j.contains("train") ? TrainConfig::from_json(j.at("train")) : TrainConfig{};
        cfg.elitist = j.value("elitist", false);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("evolution config: ") + e.what());
    }
    return cfg;
}

std::string evolution_config_digest(const EvolutionConfig& cfg,
                                    const nn::NetworkConfig& netcfg) {
    nlohmann::json j{{"evolution", cfg.to_json()}, {"network", netcfg.to_json()}};
    // niter is a stopping horizon, not part of the search's identity:
    // resuming a run to a later horizon must match its stored digest.
    j["evolution"].erase("generations");
    return digest_string(j.dump());
}

EvolutionResult evolve(const EvolutionConfig& cfg, const nn::NetworkConfig& netcfg,
                       const data::WindowedDataset& train_set,
                       const data::WindowedDataset& validation_set,
                       const std::optional<std::filesystem::path>& state_dir) {
    cfg.validate();
    if (train_set.size() == 0 || validation_set.size() == 0) {
        throw ValidationError("evolve: datasets must be non-empty");
    }
    EvolutionState state;
    state.config_digest = evolution_config_digest(cfg, netcfg);
    if (state_dir) std::filesystem::create_directories(*state_dir);
    return run_loop(cfg, netcfg, train_set, validation_set, std::move(state), state_dir);
}

EvolutionResult resume(const std::filesystem::path& state_dir, const EvolutionConfig& cfg,
                       const nn::NetworkConfig& netcfg, const data::WindowedDataset& train_set,
                       const data::WindowedDataset& validation_set) {
    cfg.validate();
    EvolutionState state = load_state(state_dir);
    const std::string expected = evolution_config_digest(cfg, netcfg);
    if (state.config_digest != expected) {
        throw ValidationError("resume: config digest mismatch (stored " + state.config_digest +
                              ", current " + expected + ")");
    }
    // A run whose stored progress already covers cfg.generations returns
    // its result without training; otherwise the loop continues from the
    // persisted generation counter.
    if (state.next_generation >= cfg.generations) {
        if (!state.a_best.has_value()) {
            throw ValidationError("resume: persisted state lacks a best matrix");
        }
        return EvolutionResult{*state.a_best, state.best_f1, std::move(state.history), 0};
    }
    state.completed = false;
    return run_loop(cfg, netcfg, train_set, validation_set, std::move(state), state_dir);
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<FitnessRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write fitness history: " + path.string());
    out << "generation,f1,best_f1,matrix_digest,seconds\n";
    for (const auto& r : history) {
        out << r.generation << "," << format_double(r.f1) << "," << format_double(r.best_f1)
            << "," << r.matrix_digest << "," << format_double(r.seconds) << "\n";
    }
    if (!out) throw std::runtime_error("failed writing fitness history: " + path.string());
}

}  // namespace har
