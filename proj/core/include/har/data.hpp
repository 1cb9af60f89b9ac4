#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "har/rng.hpp"
#include "har/tensor.hpp"

namespace har::data {

/// Continuous multichannel recording with one label per sample.
struct RawRecording {
    Tensor samples;  // [L, D]
    std::vector<int> labels;
    std::vector<std::string> channel_names;
    double sample_rate_hz = 0.0;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> imu_groups;
    std::size_t dropped_rows = 0;  // rows removed because gaps were not interpolatable

    std::size_t length() const { return labels.size(); }
    std::size_t channels() const { return channel_names.size(); }
};

struct NormalizationStats {
    std::vector<double> channel_min;
    std::vector<double> channel_max;

    std::size_t channels() const { return channel_min.size(); }
};

/// Fixed-length windows cut from recordings, one class label each.
struct WindowedDataset {
    Tensor segments;  // [B, T, D]
    std::vector<int> labels;
    std::size_t window_length = 0;
    std::size_t step = 0;
    NormalizationStats stats;  // training-split statistics used to normalize

    std::size_t size() const { return labels.size(); }
    std::size_t channels() const { return segments.rank() == 3 ? segments.dim(2) : 0; }

    /// Copy of window b as [T, D].
    Tensor segment(std::size_t b) const;
};

/// Appends `more` to `into`; window geometry and channel counts must match.
void append_windows(WindowedDataset& into, const WindowedDataset& more);

struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::string label_column = "label";
    std::vector<std::string> channel_columns;
    std::size_t max_gap = 5;   // longest missing run bridged by interpolation
    int num_classes = -1;      // -1 disables label range checking
};

/// Reads "timestamp,label,<channels...>" CSV. Missing values (empty field
/// or NaN) are linearly interpolated within gaps of at most max_gap
/// samples; rows that stay incomplete are dropped and counted.
RawRecording load_csv(const std::filesystem::path& path, const CsvSchema& schema);

void write_recording_csv(const RawRecording& rec, const std::filesystem::path& path);

/// Per-channel min-max scaling to [0, 1]. When `stats` is empty they are
/// computed from this recording (training split); otherwise the given
/// training statistics are applied and values are clamped to [0, 1].
/// Constant channels map to 0.
std::pair<RawRecording, NormalizationStats> normalize_per_channel(
    const RawRecording& rec, const std::optional<NormalizationStats>& stats = std::nullopt);

/// Min/max over several recordings of the same channel layout.
NormalizationStats compute_stats(const std::vector<RawRecording>& recordings);

/// i.i.d. Gaussian perturbation of every element; training-time only.
Tensor add_gaussian_noise(const Tensor& segments, double mu, double sigma, RngState& rng);

enum class WindowLabeling { majority, last };

WindowLabeling parse_window_labeling(const std::string& name);
const char* window_labeling_name(WindowLabeling labeling);

/// Windows start at 0, s, 2s, ...; count is floor((L-T)/s)+1 for L >= T,
/// otherwise an empty dataset (with a warning). Majority labeling breaks
/// ties toward the smallest label.
WindowedDataset sliding_windows(const RawRecording& rec, std::size_t window_length,
                                std::size_t step, WindowLabeling labeling);

/// Mean-pool blocks of `factor` samples then keep one sample per block
/// (label taken from the block's last sample).
RawRecording downsample_mean(const RawRecording& rec, std::size_t factor);

/// Synthetic multichannel recording: per class, sinusoids with
/// class-specific frequencies plus Gaussian noise, in contiguous labeled
/// spans. Deterministic under seed; classes are distinguishable by
/// construction (distinct frequency tuples).
struct SynthSpec {
    std::size_t num_classes = 0;
    std::size_t channels = 0;
    std::size_t imu_group_count = 1;
    std::size_t samples_per_class = 0;
    double sample_rate_hz = 30.0;
    double base_frequency_hz = 0.6;
    double frequency_step_hz = 0.35;
    double amplitude = 0.35;
    double noise_sigma = 0.02;
    std::uint64_t seed = 0;
    // Optional explicit [K][D] frequency table; derived from the fields
    // above when empty.
    std::vector<std::vector<double>> class_frequencies;
    // Optional per-channel amplitudes; `amplitude` everywhere when empty.
    std::vector<double> channel_amplitudes;

    void validate() const;
    double frequency(std::size_t klass, std::size_t channel) const;
    double channel_amplitude(std::size_t channel) const;

    nlohmann::json to_json() const;
    static SynthSpec from_json(const nlohmann::json& j);
};

RawRecording synth_generate(const SynthSpec& spec);

/// Dataset description shared by all commands: channel schema, IMU
/// groups, window geometry, and split file lists (paths relative to the
/// config file).
struct DatasetConfig {
    std::string name;
    std::size_t num_classes = 0;
    std::string label_column = "label";
    std::vector<std::string> channels;
    std::vector<std::pair<std::string, std::vector<std::size_t>>> imu_groups;
    std::size_t window_length = 0;
    std::size_t window_step = 0;
    WindowLabeling labeling = WindowLabeling::majority;
    std::size_t max_gap = 5;
    std::size_t downsample = 1;
    double sample_rate_hz = 30.0;
    std::map<std::string, std::vector<std::filesystem::path>> splits;

    void validate() const;
    std::vector<std::vector<std::size_t>> group_indices() const;
    CsvSchema csv_schema() const;

    nlohmann::json to_json() const;
    static DatasetConfig from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);
};

/// Full pipeline for one split: load CSVs, optional downsampling,
/// normalization (training statistics computed here when `stats` is
/// empty), and windowing. Windows are concatenated in file order.
WindowedDataset load_split(const DatasetConfig& cfg, const std::string& split,
                           const std::optional<NormalizationStats>& stats = std::nullopt);

}  // namespace har::data
