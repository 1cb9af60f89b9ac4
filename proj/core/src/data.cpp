#include "har/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "har/errors.hpp"
#include "har/format.hpp"
#include "har/log.hpp"

namespace har::data {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool is_missing(const std::string& field) {
    if (field.empty()) return true;
    std::string lower = field;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return lower == "nan";
}

}  // namespace

Tensor WindowedDataset::segment(std::size_t b) const {
    const std::size_t T = window_length;
    const std::size_t D = channels();
    if (b >= size()) throw ValidationError("segment index out of range");
    return Tensor({T, D}, std::vector<double>(segments.data() + b * T * D,
                                              segments.data() + (b + 1) * T * D));
}

void append_windows(WindowedDataset& into, const WindowedDataset& more) {
    if (into.size() == 0) {
        into = more;
        return;
    }
    if (more.size() == 0) return;
    if (into.window_length != more.window_length || into.channels() != more.channels()) {
        throw ValidationError("cannot append windows with different geometry");
    }
    std::vector<double> merged = into.segments.values();
    merged.insert(merged.end(), more.segments.values().begin(), more.segments.values().end());
    into.segments = Tensor({into.size() + more.size(), into.window_length, into.channels()},
                           std::move(merged));
    into.labels.insert(into.labels.end(), more.labels.begin(), more.labels.end());
}

RawRecording load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read CSV: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_fields(line);

    auto column_of = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw ValidationError("CSV " + path.string() + " is missing column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    const std::size_t label_col = column_of(schema.label_column);
    std::vector<std::size_t> channel_cols;
    channel_cols.reserve(schema.channel_columns.size());
    for (const auto& name : schema.channel_columns) channel_cols.push_back(column_of(name));
    const std::size_t D = channel_cols.size();
    if (D == 0) throw ValidationError("CSV schema names no channel columns");

    std::vector<double> values;  // row-major, NaN marks missing entries
    std::vector<int> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ValidationError("malformed row " + std::to_string(line_no) + " in " +
                                  path.string() + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        int label = 0;
        try {
            std::size_t used = 0;
            label = std::stoi(fields[label_col], &used);
            if (used != fields[label_col].size()) throw std::invalid_argument("trailing chars");
        } catch (const std::exception&) {
            throw ValidationError("malformed label in row " + std::to_string(line_no) + " of " +
                                  path.string());
        }
        if (label < 0 || (schema.num_classes >= 0 && label >= schema.num_classes)) {
            throw ValidationError("unknown label " + std::to_string(label) + " in row " +
                                  std::to_string(line_no) + " of " + path.string());
        }
        labels.push_back(label);
        for (std::size_t c = 0; c < D; ++c) {
            const std::string& field = fields[channel_cols[c]];
            if (is_missing(field)) {
                values.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            try {
                std::size_t used = 0;
                values.push_back(std::stod(field, &used));
                if (used != field.size()) throw std::invalid_argument("trailing chars");
            } catch (const std::exception&) {
                throw ValidationError("malformed value '" + field + "' in row " +
                                      std::to_string(line_no) + " of " + path.string());
            }
        }
    }
    if (labels.empty()) throw ValidationError("CSV has no data rows: " + path.string());

    const std::size_t L = labels.size();

    // Bridge short per-channel gaps by linear interpolation; rows with any
    // remaining missing value are dropped.
    std::vector<char> keep(L, 1);
    for (std::size_t c = 0; c < D; ++c) {
        std::size_t i = 0;
        while (i < L) {
            if (!std::isnan(values[i * D + c])) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < L && std::isnan(values[j * D + c])) ++j;
            const bool bounded = i > 0 && j < L;
            if (bounded && (j - i) <= schema.max_gap) {
                const double left = values[(i - 1) * D + c];
                const double right = values[j * D + c];
                const double span = static_cast<double>(j - i + 1);
                for (std::size_t r = i; r < j; ++r) {
                    const double t = static_cast<double>(r - i + 1) / span;
                    values[r * D + c] = left + (right - left) * t;
                }
            } else {
                for (std::size_t r = i; r < j; ++r) keep[r] = 0;
            }
            i = j;
        }
    }

    RawRecording rec;
    rec.channel_names = schema.channel_columns;
    std::vector<double> kept_values;
    kept_values.reserve(values.size());
    for (std::size_t r = 0; r < L; ++r) {
        if (!keep[r]) {
            ++rec.dropped_rows;
            continue;
        }
        kept_values.insert(kept_values.end(), values.begin() + r * D,
                           values.begin() + (r + 1) * D);
        rec.labels.push_back(labels[r]);
    }
    if (rec.labels.empty()) {
        throw ValidationError("all rows of " + path.string() + " were dropped (missing data)");
    }
    rec.samples = Tensor({rec.labels.size(), D}, std::move(kept_values));
    if (rec.dropped_rows > 0) {
        log::warn(path.string() + ": dropped " + std::to_string(rec.dropped_rows) +
                  " rows with non-interpolatable gaps");
    }
    return rec;
}

void write_recording_csv(const RawRecording& rec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write CSV: " + path.string());
    out << "timestamp,label";
    for (const auto& name : rec.channel_names) out << "," << name;
    out << "\n";
    const std::size_t D = rec.channels();
    const double dt = rec.sample_rate_hz > 0 ? 1.0 / rec.sample_rate_hz : 1.0;
    for (std::size_t i = 0; i < rec.length(); ++i) {
        out << format_double(static_cast<double>(i) * dt) << "," << rec.labels[i];
        for (std::size_t c = 0; c < D; ++c) {
            out << "," << format_double(rec.samples(i, c));
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("failed writing CSV: " + path.string());
}

std::pair<RawRecording, NormalizationStats> normalize_per_channel(
    const RawRecording& rec, const std::optional<NormalizationStats>& stats) {
    const std::size_t D = rec.channels();
    NormalizationStats used;
    if (stats.has_value()) {
        if (stats->channels() != D) {
            throw ValidationError("normalization statistics cover " +
                                  std::to_string(stats->channels()) + " channels, recording has " +
                                  std::to_string(D));
        }
        used = *stats;
    } else {
        used = compute_stats({rec});
    }

    RawRecording out = rec;
    for (std::size_t c = 0; c < D; ++c) {
        const double lo = used.channel_min[c];
        const double range = used.channel_max[c] - lo;
        for (std::size_t i = 0; i < rec.length(); ++i) {
            double v = range > 0.0 ? (rec.samples(i, c) - lo) / range : 0.0;
            out.samples(i, c) = std::clamp(v, 0.0, 1.0);
        }
    }
    return {std::move(out), std::move(used)};
}

NormalizationStats compute_stats(const std::vector<RawRecording>& recordings) {
    if (recordings.empty()) throw ValidationError("compute_stats: no recordings");
    const std::size_t D = recordings.front().channels();
    NormalizationStats stats;
    stats.channel_min.assign(D, std::numeric_limits<double>::infinity());
    stats.channel_max.assign(D, -std::numeric_limits<double>::infinity());
    for (const auto& rec : recordings) {
        if (rec.channels() != D) {
            throw ValidationError("compute_stats: recordings disagree on channel count");
        }
        for (std::size_t i = 0; i < rec.length(); ++i) {
            for (std::size_t c = 0; c < D; ++c) {
                stats.channel_min[c] = std::min(stats.channel_min[c], rec.samples(i, c));
                stats.channel_max[c] = std::max(stats.channel_max[c], rec.samples(i, c));
            }
        }
    }
    return stats;
}

Tensor add_gaussian_noise(const Tensor& segments, double mu, double sigma, RngState& rng) {
    if (sigma < 0.0) throw ValidationError("noise sigma must be >= 0");
    if (sigma == 0.0 && mu == 0.0) return segments;
    Tensor out = segments;
    for (double& v : out.values()) v += rng.normal(mu, sigma);
    return out;
}

WindowLabeling parse_window_labeling(const std::string& name) {
    if (name == "majority") return WindowLabeling::majority;
    if (name == "last") return WindowLabeling::last;
    throw ValidationError("unknown window labeling '" + name + "' (expected majority or last)");
}

const char* window_labeling_name(WindowLabeling labeling) {
    return labeling == WindowLabeling::majority ? "majority" : "last";
}

WindowedDataset sliding_windows(const RawRecording& rec, std::size_t window_length,
                                std::size_t step, WindowLabeling labeling) {
    if (window_length < 1 || step < 1) {
        throw ValidationError("sliding_windows: window length and step must be >= 1");
    }
    const std::size_t L = rec.length();
    const std::size_t D = rec.channels();

    WindowedDataset ds;
    ds.window_length = window_length;
    ds.step = step;
    if (L < window_length) {
        log::warn("recording of length " + std::to_string(L) +
                  " is shorter than the window length " + std::to_string(window_length) +
                  "; produced no windows");
        ds.segments = Tensor({0, window_length, D});
        return ds;
    }

    const std::size_t count = (L - window_length) / step + 1;
    ds.segments = Tensor({count, window_length, D});
    ds.labels.reserve(count);

    std::vector<std::size_t> votes;
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * step;
        std::copy(rec.samples.data() + start * D,
                  rec.samples.data() + (start + window_length) * D,
                  ds.segments.data() + w * window_length * D);
        if (labeling == WindowLabeling::last) {
            ds.labels.push_back(rec.labels[start + window_length - 1]);
        } else {
            votes.clear();
            for (std::size_t i = 0; i < window_length; ++i) {
                const auto label = static_cast<std::size_t>(rec.labels[start + i]);
                if (label >= votes.size()) votes.resize(label + 1, 0);
                ++votes[label];
            }
            std::size_t best = 0;
            for (std::size_t k = 1; k < votes.size(); ++k) {
                if (votes[k] > votes[best]) best = k;  // ties keep the smaller label
            }
            ds.labels.push_back(static_cast<int>(best));
        }
    }
    return ds;
}

RawRecording downsample_mean(const RawRecording& rec, std::size_t factor) {
    if (factor < 1) throw ValidationError("downsample factor must be >= 1");
    if (factor == 1) return rec;
    const std::size_t blocks = rec.length() / factor;
    if (blocks == 0) throw ValidationError("recording too short to downsample by factor " +
                                           std::to_string(factor));
    const std::size_t D = rec.channels();
    RawRecording out;
    out.channel_names = rec.channel_names;
    out.imu_groups = rec.imu_groups;
    out.sample_rate_hz = rec.sample_rate_hz / static_cast<double>(factor);
    out.samples = Tensor({blocks, D});
    out.labels.reserve(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t c = 0; c < D; ++c) {
            double sum = 0.0;
            for (std::size_t i = 0; i < factor; ++i) sum += rec.samples(b * factor + i, c);
            out.samples(b, c) = sum / static_cast<double>(factor);
        }
        out.labels.push_back(rec.labels[b * factor + factor - 1]);
    }
    return out;
}

void SynthSpec::validate() const {
    if (num_classes < 1) throw ValidationError("synth: num_classes must be >= 1");
    if (channels < 1) throw ValidationError("synth: channels must be >= 1");
    if (samples_per_class < 1) throw ValidationError("synth: samples_per_class must be >= 1");
    if (imu_group_count < 1 || imu_group_count > channels) {
        throw ValidationError("synth: imu_group_count must be in [1, channels]");
    }
    if (sample_rate_hz <= 0.0) throw ValidationError("synth: sample_rate_hz must be > 0");
    if (noise_sigma < 0.0) throw ValidationError("synth: noise_sigma must be >= 0");
    if (!class_frequencies.empty()) {
        if (class_frequencies.size() != num_classes) {
            throw ValidationError("synth: class_frequencies must have one row per class");
        }
        for (const auto& row : class_frequencies) {
            if (row.size() != channels) {
                throw ValidationError("synth: class_frequencies rows must have one entry per channel");
            }
        }
        for (std::size_t a = 0; a < num_classes; ++a) {
            for (std::size_t b = a + 1; b < num_classes; ++b) {
                if (class_frequencies[a] == class_frequencies[b]) {
                    throw ValidationError("synth: classes " + std::to_string(a) + " and " +
                                          std::to_string(b) + " have identical frequency tuples");
                }
            }
        }
    } else if (frequency_step_hz <= 0.0 || base_frequency_hz <= 0.0) {
        throw ValidationError("synth: base frequency and frequency step must be > 0");
    }
    if (!channel_amplitudes.empty() && channel_amplitudes.size() != channels) {
        throw ValidationError("synth: channel_amplitudes must have one entry per channel");
    }
}

double SynthSpec::frequency(std::size_t klass, std::size_t channel) const {
    if (!class_frequencies.empty()) return class_frequencies[klass][channel];
    // Distinct tuples per class, mildly varied across channels.
    return base_frequency_hz + static_cast<double>(klass) * frequency_step_hz +
           static_cast<double>(channel) * frequency_step_hz /
               (2.0 * static_cast<double>(channels));
}

double SynthSpec::channel_amplitude(std::size_t channel) const {
    return channel_amplitudes.empty() ? amplitude : channel_amplitudes[channel];
}

nlohmann::json SynthSpec::to_json() const {
    nlohmann::json j{{"num_classes", num_classes},
                     {"channels", channels},
                     {"imu_group_count", imu_group_count},
                     {"samples_per_class", samples_per_class},
                     {"sample_rate_hz", sample_rate_hz},
                     {"base_frequency_hz", base_frequency_hz},
                     {"frequency_step_hz", frequency_step_hz},
                     {"amplitude", amplitude},
                     {"noise_sigma", noise_sigma},
                     {"seed", seed}};
    if (!class_frequencies.empty()) j["class_frequencies"] = class_frequencies;
    if (!channel_amplitudes.empty()) j["channel_amplitudes"] = channel_amplitudes;
    return j;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
    SynthSpec spec;
    try {
        spec.num_classes = j.at("num_classes").get<std::size_t>();
        spec.channels = j.at("channels").get<std::size_t>();
        spec.imu_group_count = j.value("imu_group_count", std::size_t{1});
        spec.samples_per_class = j.at("samples_per_class").get<std::size_t>();
        spec.sample_rate_hz = j.value("sample_rate_hz", 30.0);
        spec.base_frequency_hz = j.value("base_frequency_hz", 0.6);
        spec.frequency_step_hz = j.value("frequency_step_hz", 0.35);
        spec.amplitude = j.value("amplitude", 0.35);
        spec.noise_sigma = j.value("noise_sigma", 0.02);
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.class_frequencies =
            j.value("class_frequencies", std::vector<std::vector<double>>{});
        spec.channel_amplitudes = j.value("channel_amplitudes", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("synth spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

RawRecording synth_generate(const SynthSpec& spec) {
    spec.validate();
    RngState rng(spec.seed);
    const std::size_t K = spec.num_classes, D = spec.channels;
    const std::size_t L = K * spec.samples_per_class;

    RawRecording rec;
    rec.sample_rate_hz = spec.sample_rate_hz;
    for (std::size_t c = 0; c < D; ++c) rec.channel_names.push_back("ch" + std::to_string(c));

    // Evenly sized channel groups, remainder spread over the first groups.
    const std::size_t groups = spec.imu_group_count;
    std::size_t next = 0;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t size = D / groups + (g < D % groups ? 1 : 0);
        std::vector<std::size_t> idx(size);
        for (std::size_t i = 0; i < size; ++i) idx[i] = next++;
        rec.imu_groups.emplace_back("imu_" + std::to_string(g), std::move(idx));
    }

    // Per-class per-channel phases drawn up front, then per-sample noise.
    std::vector<double> phases(K * D);
    for (double& p : phases) p = rng.uniform(0.0, 2.0 * M_PI);

    rec.samples = Tensor({L, D});
    rec.labels.assign(L, 0);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            const std::size_t row = k * spec.samples_per_class + i;
            const double t = static_cast<double>(row) / spec.sample_rate_hz;
            rec.labels[row] = static_cast<int>(k);
            for (std::size_t c = 0; c < D; ++c) {
                double v = 0.5 + spec.channel_amplitude(c) *
                                     std::sin(2.0 * M_PI * spec.frequency(k, c) * t +
                                              phases[k * D + c]);
                if (spec.noise_sigma > 0.0) v += rng.normal(0.0, spec.noise_sigma);
                rec.samples(row, c) = v;
            }
        }
    }
    return rec;
}

void DatasetConfig::validate() const {
    if (num_classes < 1) throw ValidationError("dataset: num_classes must be >= 1");
    if (channels.empty()) throw ValidationError("dataset: channel list is empty");
    if (window_length < 1 || window_step < 1) {
        throw ValidationError("dataset: window length and step must be >= 1");
    }
    if (downsample < 1) throw ValidationError("dataset: downsample factor must be >= 1");
    std::vector<char> seen(channels.size(), 0);
    for (const auto& [name, idx] : imu_groups) {
        if (idx.empty()) throw ValidationError("dataset: IMU group '" + name + "' is empty");
        for (std::size_t ch : idx) {
            if (ch >= channels.size()) {
                throw ValidationError("dataset: IMU group '" + name + "' references channel " +
                                      std::to_string(ch) + " outside [0, " +
                                      std::to_string(channels.size()) + ")");
            }
            if (seen[ch]) {
                throw ValidationError("dataset: channel " + std::to_string(ch) +
                                      " appears in more than one IMU group");
            }
            seen[ch] = 1;
        }
    }
}

std::vector<std::vector<std::size_t>> DatasetConfig::group_indices() const {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(imu_groups.size());
    for (const auto& [name, idx] : imu_groups) out.push_back(idx);
    return out;
}

CsvSchema DatasetConfig::csv_schema() const {
    CsvSchema schema;
    schema.label_column = label_column;
    schema.channel_columns = channels;
    schema.max_gap = max_gap;
    schema.num_classes = static_cast<int>(num_classes);
    return schema;
}

nlohmann::json DatasetConfig::to_json() const {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& [name, idx] : imu_groups) {
        groups.push_back(nlohmann::json{{"name", name}, {"channels", idx}});
    }
    nlohmann::json splits_json = nlohmann::json::object();
    for (const auto& [split, files] : splits) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& f : files) list.push_back(f.string());
        splits_json[split] = std::move(list);
    }
    return nlohmann::json{{"name", name},
                          {"num_classes", num_classes},
                          {"label_column", label_column},
                          {"channels", channels},
                          {"imu_groups", std::move(groups)},
                          {"window",
                           {{"length", window_length},
                            {"step", window_step},
                            {"labeling", window_labeling_name(labeling)}}},
                          {"max_gap", max_gap},
                          {"downsample", downsample},
                          {"sample_rate_hz", sample_rate_hz},
                          {"splits", std::move(splits_json)}};
}

DatasetConfig DatasetConfig::from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir) {
    DatasetConfig cfg;
    try {
        cfg.name = j.value("name", std::string{"dataset"});
        cfg.num_classes = j.at("num_classes").get<std::size_t>();
        cfg.label_column = j.value("label_column", std::string{"label"});
        cfg.channels = j.at("channels").get<std::vector<std::string>>();
        const nlohmann::json groups = j.value("imu_groups", nlohmann::json::array());
        for (const auto& g : groups) {
            cfg.imu_groups.emplace_back(g.at("name").get<std::string>(),
                                        g.at("channels").get<std::vector<std::size_t>>());
        }
        const auto& window = j.at("window");
        cfg.window_length = window.at("length").get<std::size_t>();
        cfg.window_step = window.at("step").get<std::size_t>();
        cfg.labeling = parse_window_labeling(window.value("labeling", std::string{"majority"}));
        cfg.max_gap = j.value("max_gap", std::size_t{5});
        cfg.downsample = j.value("downsample", std::size_t{1});
        cfg.sample_rate_hz = j.value("sample_rate_hz", 30.0);
        const nlohmann::json split_map = j.value("splits", nlohmann::json::object());
        for (const auto& [split, files] : split_map.items()) {
            std::vector<std::filesystem::path> paths;
            for (const auto& f : files) {
                std::filesystem::path p = f.get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                paths.push_back(std::move(p));
            }
            cfg.splits[split] = std::move(paths);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dataset config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

WindowedDataset load_split(const DatasetConfig& cfg, const std::string& split,
                           const std::optional<NormalizationStats>& stats) {
    const auto it = cfg.splits.find(split);
    if (it == cfg.splits.end() || it->second.empty()) {
        throw ValidationError("dataset '" + cfg.name + "' declares no files for split '" +
                              split + "'");
    }

    std::vector<RawRecording> recordings;
    recordings.reserve(it->second.size());
    for (const auto& file : it->second) {
        RawRecording rec = load_csv(file, cfg.csv_schema());
        rec.sample_rate_hz = cfg.sample_rate_hz;
        rec.imu_groups = cfg.imu_groups;
        if (cfg.downsample > 1) rec = downsample_mean(rec, cfg.downsample);
        recordings.push_back(std::move(rec));
    }

    const NormalizationStats used = stats.has_value() ? *stats : compute_stats(recordings);

    WindowedDataset out;
    out.window_length = cfg.window_length;
    out.step = cfg.window_step;
    for (const auto& rec : recordings) {
        auto [normalized, _] = normalize_per_channel(rec, used);
        WindowedDataset windows =
            sliding_windows(normalized, cfg.window_length, cfg.window_step, cfg.labeling);
        append_windows(out, windows);
    }
    if (out.size() == 0) {
        throw ValidationError("split '" + split + "' produced no windows");
    }
    out.stats = used;
    return out;
}

}  // namespace har::data
