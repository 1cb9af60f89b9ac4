#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "har/data.hpp"
#include "har/errors.hpp"
#include "oracles.hpp"

using namespace har;
using namespace har::data;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

CsvSchema two_channel_schema() {
    CsvSchema schema;
    schema.channel_columns = {"a", "b"};
    return schema;
}

// Naive discrete-Fourier magnitude at one frequency over one channel span.
double dft_magnitude(const RawRecording& rec, std::size_t channel, std::size_t begin,
                     std::size_t end, double freq_hz) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double t = double(i) / rec.sample_rate_hz;
        const double v = rec.samples(i, channel) - 0.5;
        re += v * std::cos(2.0 * M_PI * freq_hz * t);
        im -= v * std::sin(2.0 * M_PI * freq_hz * t);
    }
    return std::sqrt(re * re + im * im);
}

}  // namespace

TEST_CASE("csv parsing, shapes and labels") {
    const auto path = write_temp("har_data_basic.csv",
                                 "timestamp,label,a,b\n"
                                 "0.0,0,1.0,2.0\n"
                                 "0.1,1,3.0,4.0\n"
                                 "0.2,0,5.0,6.0\n");
    const RawRecording rec = load_csv(path, two_channel_schema());
    CHECK(rec.length() == 3);
    CHECK(rec.channels() == 2);
    CHECK(rec.labels == std::vector<int>{0, 1, 0});
    CHECK(rec.samples(2, 1) == 6.0);
    std::filesystem::remove(path);
}

TEST_CASE("csv single-sample gaps are interpolated") {
    const auto path = write_temp("har_data_gap.csv",
                                 "timestamp,label,a,b\n"
                                 "0.0,0,1.0,2.0\n"
                                 "0.1,0,NaN,4.0\n"
                                 "0.2,0,3.0,\n"
                                 "0.3,0,5.0,8.0\n");
    const RawRecording rec = load_csv(path, two_channel_schema());
    CHECK(rec.length() == 4);
    CHECK(rec.dropped_rows == 0);
    CHECK(rec.samples(1, 0) == doctest::Approx(2.0).epsilon(1e-12));  // midpoint of 1 and 3
    CHECK(rec.samples(2, 1) == doctest::Approx(6.0).epsilon(1e-12));  // midpoint of 4 and 8
    std::filesystem::remove(path);
}

TEST_CASE("csv long or unbounded gaps drop rows") {
    CsvSchema schema = two_channel_schema();
    schema.max_gap = 1;
    const auto path = write_temp("har_data_drop.csv",
                                 "timestamp,label,a,b\n"
                                 "0.0,0,NaN,2.0\n"   // gap at start: no left neighbor
                                 "0.1,0,1.0,4.0\n"
                                 "0.2,0,NaN,5.0\n"   // run of two > max_gap
                                 "0.3,0,NaN,6.0\n"
                                 "0.4,0,9.0,7.0\n");
    const RawRecording rec = load_csv(path, schema);
    CHECK(rec.dropped_rows == 3);
    CHECK(rec.length() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("csv schema and label validation") {
    const auto no_label = write_temp("har_data_nolabel.csv", "timestamp,a,b\n0,1,2\n");
    CHECK_THROWS_AS(load_csv(no_label, two_channel_schema()), ValidationError);
    std::filesystem::remove(no_label);

    const auto empty = write_temp("har_data_empty.csv", "");
    CHECK_THROWS_AS(load_csv(empty, two_channel_schema()), ValidationError);
    std::filesystem::remove(empty);

    CsvSchema bounded = two_channel_schema();
    bounded.num_classes = 2;
    const auto bad_label =
        write_temp("har_data_badlabel.csv", "timestamp,label,a,b\n0,5,1,2\n");
    CHECK_THROWS_AS(load_csv(bad_label, bounded), ValidationError);
    std::filesystem::remove(bad_label);

    const auto malformed =
        write_temp("har_data_malformed.csv", "timestamp,label,a,b\n0,0,1\n");
    CHECK_THROWS_AS(load_csv(malformed, two_channel_schema()), ValidationError);
    std::filesystem::remove(malformed);
}

TEST_CASE("normalization maps channels to [0,1]") {
    RawRecording rec;
    rec.channel_names = {"a", "b"};
    rec.labels = {0, 0, 0};
    rec.samples = Tensor({3, 2}, {2.0, 5.0, 4.0, 5.0, 6.0, 5.0});
    const auto [normalized, stats] = normalize_per_channel(rec);
    CHECK(normalized.samples(0, 0) == 0.0);
    CHECK(normalized.samples(1, 0) == 0.5);
    CHECK(normalized.samples(2, 0) == 1.0);
    // constant channel maps to 0
    CHECK(normalized.samples(0, 1) == 0.0);
    CHECK(normalized.samples(2, 1) == 0.0);
    CHECK(stats.channel_min[0] == 2.0);
    CHECK(stats.channel_max[0] == 6.0);
}

TEST_CASE("normalization with training stats clamps out-of-range values") {
    RawRecording rec;
    rec.channel_names = {"a"};
    rec.labels = {0, 0};
    rec.samples = Tensor({2, 1}, {10.0, -3.0});
    NormalizationStats stats;
    stats.channel_min = {0.0};
    stats.channel_max = {5.0};
    const auto [normalized, _] = normalize_per_channel(rec, stats);
    CHECK(normalized.samples(0, 0) == 1.0);
    CHECK(normalized.samples(1, 0) == 0.0);

    NormalizationStats wrong;
    wrong.channel_min = {0.0, 0.0};
    wrong.channel_max = {1.0, 1.0};
    CHECK_THROWS_AS(normalize_per_channel(rec, wrong), ValidationError);
}

TEST_CASE("gaussian noise statistics and determinism") {
    RngState rng(1);
    Tensor segments = Tensor::full({1000, 10, 10}, 0.25);
    const Tensor noisy = add_gaussian_noise(segments, 0.0, 0.01, rng);

    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        const double d = noisy[i] - 0.25;
        sum += d;
        sum_sq += d * d;
    }
    const double n = double(noisy.size());
    const double mean = sum / n;
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std::sqrt(sum_sq / n - mean * mean) == doctest::Approx(0.01).epsilon(0.05));

    RngState rng2(1);
    const Tensor again = add_gaussian_noise(segments, 0.0, 0.01, rng2);
    CHECK(noisy == again);

    RngState rng3(1);
    CHECK(add_gaussian_noise(segments, 0.0, 0.0, rng3) == segments);
}

TEST_CASE("window counts follow the sliding formula") {
    RawRecording rec;
    rec.channel_names = {"a"};
    rec.labels.assign(100, 0);
    rec.samples = Tensor({100, 1});
    const WindowedDataset ds = sliding_windows(rec, 24, 12, WindowLabeling::majority);
    CHECK(ds.size() == 7);
    CHECK(ds.segments.shape() == std::vector<std::size_t>{7, 24, 1});

    rec.labels.assign(24, 0);
    rec.samples = Tensor({24, 1});
    CHECK(sliding_windows(rec, 24, 5, WindowLabeling::majority).size() == 1);

    rec.labels.assign(10, 0);
    rec.samples = Tensor({10, 1});
    CHECK(sliding_windows(rec, 24, 12, WindowLabeling::majority).size() == 0);
}

TEST_CASE("window labels match an exhaustive vote count") {
    RawRecording rec;
    rec.channel_names = {"a"};
    rec.labels = {0, 0, 1, 1, 1, 2, 2, 0, 0, 0, 1, 2};
    rec.samples = Tensor({12, 1});
    const std::size_t T = 5, s = 2;
    const WindowedDataset ds = sliding_windows(rec, T, s, WindowLabeling::majority);
    for (std::size_t w = 0; w < ds.size(); ++w) {
        std::vector<std::size_t> counts(3, 0);
        for (std::size_t i = 0; i < T; ++i) ++counts[rec.labels[w * s + i]];
        std::size_t best = 0;
        for (std::size_t k = 1; k < 3; ++k) {
            if (counts[k] > counts[best]) best = k;
        }
        CHECK(ds.labels[w] == int(best));
        // the window label occurs inside the window
        CHECK(counts[ds.labels[w]] > 0);
    }

    const WindowedDataset last = sliding_windows(rec, T, s, WindowLabeling::last);
    for (std::size_t w = 0; w < last.size(); ++w) {
        CHECK(last.labels[w] == rec.labels[w * s + T - 1]);
    }
}

TEST_CASE("downsampling mean-pools blocks") {
    RawRecording rec;
    rec.channel_names = {"a"};
    rec.labels = {0, 0, 1, 1, 1, 1};
    rec.sample_rate_hz = 90.0;
    rec.samples = Tensor({6, 1}, {0.0, 3.0, 6.0, 9.0, 12.0, 15.0});
    const RawRecording down = downsample_mean(rec, 3);
    CHECK(down.length() == 2);
    CHECK(down.samples(0, 0) == 3.0);
    CHECK(down.samples(1, 0) == 12.0);
    CHECK(down.labels == std::vector<int>{1, 1});
    CHECK(down.sample_rate_hz == doctest::Approx(30.0));
}

TEST_CASE("synthetic recordings are deterministic and class-distinguishable") {
    SynthSpec spec;
    spec.num_classes = 5;
    spec.channels = 6;
    spec.imu_group_count = 2;
    spec.samples_per_class = 300;
    spec.noise_sigma = 0.0;
    spec.seed = 11;
    spec.validate();

    const RawRecording a = synth_generate(spec);
    const RawRecording b = synth_generate(spec);
    CHECK(a.samples == b.samples);
    CHECK(a.labels == b.labels);
    CHECK(a.length() == 5 * 300);
    CHECK(a.imu_groups.size() == 2);

    // Spectral check: within each class span, the configured class
    // frequency dominates the other classes' frequencies on channel 0.
    for (std::size_t k = 0; k < 5; ++k) {
        const std::size_t begin = k * 300, end = (k + 1) * 300;
        const double own = dft_magnitude(a, 0, begin, end, spec.frequency(k, 0));
        for (std::size_t other = 0; other < 5; ++other) {
            if (other == k) continue;
            CHECK(own > 2.0 * dft_magnitude(a, 0, begin, end, spec.frequency(other, 0)));
        }
    }
}

TEST_CASE("synthetic single class labels everything zero") {
    SynthSpec spec;
    spec.num_classes = 1;
    spec.channels = 2;
    spec.samples_per_class = 50;
    spec.seed = 3;
    const RawRecording rec = synth_generate(spec);
    for (int label : rec.labels) CHECK(label == 0);
}

TEST_CASE("recording csv round trip") {
    SynthSpec spec;
    spec.num_classes = 2;
    spec.channels = 3;
    spec.samples_per_class = 20;
    spec.seed = 5;
    const RawRecording rec = synth_generate(spec);
    const auto path = std::filesystem::temp_directory_path() / "har_data_roundtrip.csv";
    write_recording_csv(rec, path);

    CsvSchema schema;
    schema.channel_columns = rec.channel_names;
    const RawRecording loaded = load_csv(path, schema);
    CHECK(loaded.length() == rec.length());
    CHECK(loaded.labels == rec.labels);
    CHECK(test::max_abs_diff(loaded.samples, rec.samples) == 0.0);  // exact decimal round trip
    std::filesystem::remove(path);
}

TEST_CASE("paper-shaped dataset configs type-check") {
    // Opportunity: 113 channels over 7 IMUs, T=24, s=12.
    DatasetConfig opportunity;
    opportunity.name = "opportunity";
    opportunity.num_classes = 5;
    for (int i = 0; i < 113; ++i) opportunity.channels.push_back("ch" + std::to_string(i));
    std::size_t next = 0;
    const std::size_t sizes[7] = {17, 16, 16, 16, 16, 16, 16};
    for (int g = 0; g < 7; ++g) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < sizes[g]; ++i) idx.push_back(next++);
        opportunity.imu_groups.emplace_back("imu_" + std::to_string(g), idx);
    }
    opportunity.window_length = 24;
    opportunity.window_step = 12;
    opportunity.validate();
    CHECK(next == 113);

    // Pamap2: 40 channels, 3 IMUs plus a heart-rate channel attached to the
    // chest group, T=100, s=22 at 30 Hz.
    DatasetConfig pamap2;
    pamap2.name = "pamap2";
    pamap2.num_classes = 12;
    for (int i = 0; i < 40; ++i) pamap2.channels.push_back("ch" + std::to_string(i));
    std::vector<std::size_t> hand, chest{0}, ankle;
    for (std::size_t i = 1; i < 14; ++i) hand.push_back(i);
    for (std::size_t i = 14; i < 27; ++i) chest.push_back(i);
    for (std::size_t i = 27; i < 40; ++i) ankle.push_back(i);
    pamap2.imu_groups = {{"hand", hand}, {"chest", chest}, {"ankle", ankle}};
    pamap2.window_length = 100;
    pamap2.window_step = 22;
    pamap2.validate();
}

TEST_CASE("load_split pipeline is deterministic end to end") {
    SynthSpec spec;
    spec.num_classes = 3;
    spec.channels = 4;
    spec.samples_per_class = 120;
    spec.seed = 21;
    const RawRecording rec = synth_generate(spec);
    const auto dir = std::filesystem::temp_directory_path() / "har_data_split";
    std::filesystem::create_directories(dir);
    write_recording_csv(rec, dir / "train.csv");
    write_recording_csv(rec, dir / "val.csv");

    DatasetConfig cfg;
    cfg.name = "synth";
    cfg.num_classes = 3;
    for (std::size_t c = 0; c < 4; ++c) cfg.channels.push_back("ch" + std::to_string(c));
    cfg.window_length = 24;
    cfg.window_step = 12;
    cfg.splits["train"] = {dir / "train.csv"};
    cfg.splits["validation"] = {dir / "val.csv"};
    cfg.validate();

    const WindowedDataset train1 = load_split(cfg, "train");
    const WindowedDataset train2 = load_split(cfg, "train");
    CHECK(train1.segments == train2.segments);
    CHECK(train1.labels == train2.labels);
    CHECK(train1.size() == (rec.length() - 24) / 12 + 1);

    // training-split normalization puts every value in [0,1]
    for (double v : train1.segments.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    const WindowedDataset val = load_split(cfg, "validation", train1.stats);
    for (double v : val.segments.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    CHECK_THROWS_AS(load_split(cfg, "test"), ValidationError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("per-channel amplitudes shape the synthetic signal") {
    SynthSpec spec;
    spec.num_classes = 2;
    spec.channels = 2;
    spec.samples_per_class = 200;
    spec.noise_sigma = 0.0;
    spec.seed = 9;
    spec.channel_amplitudes = {0.4, 0.05};
    const RawRecording rec = synth_generate(spec);
    double range0 = 0.0, range1 = 0.0;
    for (std::size_t i = 0; i < rec.length(); ++i) {
        range0 = std::max(range0, std::abs(rec.samples(i, 0) - 0.5));
        range1 = std::max(range1, std::abs(rec.samples(i, 1) - 0.5));
    }
    CHECK(range0 > 0.3);
    CHECK(range1 < 0.06);

    spec.channel_amplitudes = {0.4};
    CHECK_THROWS_AS(spec.validate(), ValidationError);
}

#ifdef HAR_CONFIG_DIR
TEST_CASE("shipped dataset templates parse and type-check") {
    const std::filesystem::path dir(HAR_CONFIG_DIR);
    for (const char* name :
         {"opportunity_locomotion.json", "opportunity_gestures.json", "pamap2.json",
          "synth_dataset.json"}) {
        std::ifstream in(dir / name);
        REQUIRE(in.good());
        nlohmann::json j;
        in >> j;
        const DatasetConfig cfg = DatasetConfig::from_json(j, dir);
        CHECK(cfg.num_classes >= 2);
    }

    std::ifstream opp(dir / "opportunity_locomotion.json");
    nlohmann::json j;
    opp >> j;
    const DatasetConfig cfg = DatasetConfig::from_json(j, dir);
    CHECK(cfg.channels.size() == 113);
    CHECK(cfg.imu_groups.size() == 7);
    CHECK(cfg.window_length == 24);
    CHECK(cfg.window_step == 12);

    std::ifstream pam(dir / "pamap2.json");
    nlohmann::json pj;
    pam >> pj;
    const DatasetConfig pcfg = DatasetConfig::from_json(pj, dir);
    CHECK(pcfg.channels.size() == 40);
    CHECK(pcfg.imu_groups.size() == 3);
    CHECK(pcfg.window_length == 100);
    CHECK(pcfg.window_step == 22);
    CHECK(pcfg.downsample == 3);
}

TEST_CASE("shipped synth spec parses") {
    std::ifstream in(std::filesystem::path(HAR_CONFIG_DIR) / "synth_example.json");
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    const SynthSpec spec = SynthSpec::from_json(j);
    CHECK(spec.num_classes == 5);
    CHECK(spec.channels == 6);
}
#endif

TEST_CASE("window count formula holds across random geometries") {
    RngState rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t T = 1 + rng.uniform_index(40);
        const std::size_t s = 1 + rng.uniform_index(20);
        const std::size_t L = T + rng.uniform_index(300);
        RawRecording rec;
        rec.channel_names = {"a"};
        rec.labels.assign(L, 0);
        rec.samples = Tensor({L, 1});
        const WindowedDataset ds = sliding_windows(rec, T, s, WindowLabeling::last);
        CHECK(ds.size() == (L - T) / s + 1);
    }
}
