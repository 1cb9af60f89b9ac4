#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "har/errors.hpp"
#include "har/evolution.hpp"
#include "oracles.hpp"

using namespace har;
using namespace har::nn;

namespace {

NetworkConfig toy_netcfg() {
    NetworkConfig cfg;
    cfg.architecture = Architecture::attr_cnn;
    cfg.window_length = 12;
    cfg.channel_count = 4;
    cfg.attribute_count = 6;
    cfg.conv_filters = 4;
    cfg.filter_size = 3;
    cfg.hidden_units = 8;
    cfg.dropout_rate = 0.0;
    return cfg;
}

data::WindowedDataset tiny_dataset(std::size_t count, std::size_t classes, RngState& rng) {
    data::WindowedDataset ds;
    ds.window_length = 12;
    ds.step = 12;
    ds.segments = Tensor({count, 12, 4});
    for (std::size_t b = 0; b < count; ++b) {
        const int label = int(b % classes);
        ds.labels.push_back(label);
        const double base = 0.15 + 0.7 * double(label) / double(classes - 1);
        for (std::size_t i = 0; i < 48; ++i) {
            ds.segments[b * 48 + i] = base + rng.uniform(-0.04, 0.04);
        }
    }
    return ds;
}

EvolutionConfig tiny_evocfg(std::size_t generations, std::uint64_t seed) {
    EvolutionConfig cfg;
    cfg.generations = generations;
    cfg.class_count = 3;
    cfg.attribute_count = 6;
    cfg.base_seed = seed;
    cfg.train.learning_rate = 1e-3;
    cfg.train.batch_size = 6;
    cfg.train.epochs = 2;
    cfg.train.noise_sigma = 0.0;
    return cfg;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("a single generation returns the initial random matrix") {
    RngState data_rng(1);
    const auto train_set = tiny_dataset(9, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);

    const EvolutionConfig cfg = tiny_evocfg(1, 42);
    const EvolutionResult result = evolve(cfg, toy_netcfg(), train_set, val_set);

    CHECK(result.history.size() == 1);
    RngState init_rng = RngState::derive(42, "attr-init", 0);
    const AttributeMatrix expected = random_representation(3, 6, init_rng);
    CHECK(result.best == expected);
    CHECK(result.history[0].matrix_digest == expected.digest());
}

TEST_CASE("identical configs give identical histories") {
    RngState data_rng(2);
    const auto train_set = tiny_dataset(9, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);
    const EvolutionConfig cfg = tiny_evocfg(4, 7);

    const EvolutionResult a = evolve(cfg, toy_netcfg(), train_set, val_set);
    const EvolutionResult b = evolve(cfg, toy_netcfg(), train_set, val_set);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t g = 0; g < a.history.size(); ++g) {
        CHECK(a.history[g].f1 == b.history[g].f1);
        CHECK(a.history[g].best_f1 == b.history[g].best_f1);
        CHECK(a.history[g].matrix_digest == b.history[g].matrix_digest);
        CHECK(a.history[g].init_digest == b.history[g].init_digest);
    }
    CHECK(a.best == b.best);
}

TEST_CASE("best F1 is monotone and the best digest appears at its last increase") {
    RngState data_rng(3);
    const auto train_set = tiny_dataset(12, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);
    const EvolutionConfig cfg = tiny_evocfg(6, 99);

    const EvolutionResult result = evolve(cfg, toy_netcfg(), train_set, val_set);
    CHECK(result.history.size() == 6);

    double best = 0.0;
    std::string best_digest = result.history[0].matrix_digest;
    for (const auto& rec : result.history) {
        CHECK(rec.best_f1 >= best);
        if (rec.f1 > best) {
            best = rec.f1;
            best_digest = rec.matrix_digest;
        }
        CHECK(rec.best_f1 == best);
    }
    CHECK(result.best_f1 == best);
    CHECK(result.best.digest() == best_digest);
}

TEST_CASE("every generation trains from a fresh initialization") {
    RngState data_rng(4);
    const auto train_set = tiny_dataset(9, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);
    const EvolutionConfig cfg = tiny_evocfg(5, 5);

    const EvolutionResult result = evolve(cfg, toy_netcfg(), train_set, val_set);
    std::set<std::string> digests;
    for (const auto& rec : result.history) digests.insert(rec.init_digest);
    CHECK(digests.size() == result.history.size());
}

TEST_CASE("interrupted runs resume to the uninterrupted result") {
    RngState data_rng(5);
    const auto train_set = tiny_dataset(9, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);
    const NetworkConfig netcfg = toy_netcfg();

    // Uninterrupted reference: 6 generations in one call.
    const EvolutionResult full = evolve(tiny_evocfg(6, 17), netcfg, train_set, val_set);

    // Interrupted: stop after 3, then resume to 6 in a persisted directory.
    const auto dir = fresh_dir("har_evo_resume");
    const EvolutionResult half = evolve(tiny_evocfg(3, 17), netcfg, train_set, val_set, dir);
    CHECK(half.history.size() == 3);
    const EvolutionResult resumed = resume(dir, tiny_evocfg(6, 17), netcfg, train_set, val_set);

    CHECK(resumed.generations_run == 3);
    REQUIRE(resumed.history.size() == full.history.size());
    for (std::size_t g = 0; g < full.history.size(); ++g) {
        CHECK(resumed.history[g].f1 == full.history[g].f1);
        CHECK(resumed.history[g].matrix_digest == full.history[g].matrix_digest);
    }
    CHECK(resumed.best == full.best);
    CHECK(resumed.best_f1 == full.best_f1);

    // Resuming the completed run does no more work.
    const EvolutionResult again = resume(dir, tiny_evocfg(6, 17), netcfg, train_set, val_set);
    CHECK(again.generations_run == 0);
    CHECK(again.best == full.best);

    std::filesystem::remove_all(dir);
}

TEST_CASE("resume rejects mismatched configuration") {
    RngState data_rng(6);
    const auto train_set = tiny_dataset(9, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);
    const NetworkConfig netcfg = toy_netcfg();

    const auto dir = fresh_dir("har_evo_mismatch");
    evolve(tiny_evocfg(2, 3), netcfg, train_set, val_set, dir);

    EvolutionConfig other = tiny_evocfg(4, 3);
    other.attribute_count = 7;  // different n
    NetworkConfig other_net = netcfg;
    other_net.attribute_count = 7;
    CHECK_THROWS_AS(resume(dir, other, other_net, train_set, val_set), ValidationError);

    CHECK_THROWS_AS(resume(fresh_dir("har_evo_nostate"), tiny_evocfg(2, 3), netcfg, train_set,
                           val_set),
                    ValidationError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("errors abort with partial state persisted") {
    RngState data_rng(7);
    auto train_set = tiny_dataset(9, 3, data_rng);
    const auto val_set = tiny_dataset(6, 3, data_rng);
    train_set.segments(0, 0, 0) = std::nan("");  // forward pass will reject this

    const auto dir = fresh_dir("har_evo_error");
    CHECK_THROWS(evolve(tiny_evocfg(3, 2), toy_netcfg(), train_set, val_set, dir));
    CHECK(std::filesystem::exists(dir / "state.json"));
    CHECK(std::filesystem::exists(dir / "fitness_history.csv"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("history csv carries the documented columns") {
    std::vector<FitnessRecord> history;
    FitnessRecord r;
    r.generation = 0;
    r.f1 = 0.5;
    r.best_f1 = 0.5;
    r.matrix_digest = "abc123";
    r.seconds = 1.25;
    history.push_back(r);

    const auto path = std::filesystem::temp_directory_path() / "har_evo_history.csv";
    write_history_csv(path, history);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "generation,f1,best_f1,matrix_digest,seconds");
    CHECK(row == "0,0.5,0.5,abc123,1.25");
    std::filesystem::remove(path);
}

TEST_CASE("evolution config validation") {
    EvolutionConfig cfg = tiny_evocfg(0, 1);
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = tiny_evocfg(1, 1);
    cfg.mutation.flip_probability = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
