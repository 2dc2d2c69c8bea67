#include "raekit/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

namespace raekit::data {

namespace {

bool is_missing_field(const std::string& field) {
  return field.empty() || field == "NaN" || field == "nan" || field == "NAN";
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_value(const std::string& field, std::size_t line_no, Eigen::Index column) {
  if (is_missing_field(field)) return std::nan("");
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &consumed);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad value '" +
                     field + "' in column " + std::to_string(column + 2));
  }
  if (consumed != field.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": trailing junk in '" +
                     field + "'");
  }
  return value;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RawSeries load_csv(const std::filesystem::path& path, Eigen::Index channels) {
  if (channels <= 0) throw ConfigError("load_csv: channel count must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (static_cast<Eigen::Index>(fields.size()) != channels + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(channels + 1) + " fields, got " +
                       std::to_string(fields.size()));
    }
    int label = 0;
    try {
      std::size_t consumed = 0;
      label = std::stoi(fields[0], &consumed);
      if (consumed != fields[0].size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": bad label '" +
                       fields[0] + "'");
    }
    if (label < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": negative label");
    }
    std::vector<double> row(static_cast<std::size_t>(channels));
    for (Eigen::Index c = 0; c < channels; ++c) {
      row[static_cast<std::size_t>(c)] =
          parse_value(fields[static_cast<std::size_t>(c) + 1], line_no, c);
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }

  RawSeries series;
  series.channels = channels;
  series.labels = std::move(labels);
  series.values.resize(static_cast<Eigen::Index>(rows.size()), channels);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      series.values(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
  }
  return series;
}

void save_csv(const RawSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_csv: cannot open " + path.string() + " for writing");
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    out << series.labels[static_cast<std::size_t>(t)];
    for (Eigen::Index c = 0; c < series.channels; ++c) {
      out << ',' << format_value(series.values(t, c));
    }
    out << '\n';
  }
  if (!out) throw IoError("save_csv: write failed for " + path.string());
}

RawSeries interpolate_missing(RawSeries series) {
  const Eigen::Index t_len = series.length();
  for (Eigen::Index c = 0; c < series.channels; ++c) {
    std::vector<Eigen::Index> present;
    for (Eigen::Index t = 0; t < t_len; ++t) {
      if (!std::isnan(series.values(t, c))) present.push_back(t);
    }
    if (present.empty()) {
      throw DataError("interpolate_missing: channel " + std::to_string(c) +
                      " has no present values");
    }
    // Leading and trailing gaps hold the nearest present value.
    for (Eigen::Index t = 0; t < present.front(); ++t) {
      series.values(t, c) = series.values(present.front(), c);
    }
    for (Eigen::Index t = present.back() + 1; t < t_len; ++t) {
      series.values(t, c) = series.values(present.back(), c);
    }
    for (std::size_t i = 0; i + 1 < present.size(); ++i) {
      const Eigen::Index t0 = present[i];
      const Eigen::Index t1 = present[i + 1];
      const double v0 = series.values(t0, c);
      const double v1 = series.values(t1, c);
      for (Eigen::Index t = t0 + 1; t < t1; ++t) {
        const double frac = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
        series.values(t, c) = v0 + (v1 - v0) * frac;
      }
    }
  }
  return series;
}

RawSeries decimate(const RawSeries& series, int keep_every) {
  if (keep_every < 1) throw ConfigError("decimate: keep_every must be >= 1");
  if (keep_every == 1) return series;
  RawSeries out;
  out.channels = series.channels;
  out.sample_rate_hz = series.sample_rate_hz / keep_every;
  const Eigen::Index kept = (series.length() + keep_every - 1) / keep_every;
  out.values.resize(kept, series.channels);
  out.labels.reserve(static_cast<std::size_t>(kept));
  Eigen::Index row = 0;
  for (Eigen::Index t = 0; t < series.length(); t += keep_every) {
    out.values.row(row++) = series.values.row(t);
    out.labels.push_back(series.labels[static_cast<std::size_t>(t)]);
  }
  return out;
}

namespace {

NormStats stats_from_moments(const Vector& mean, const Vector& second_moment) {
  NormStats stats;
  stats.mean = mean;
  stats.stddev = Vector(mean.size());
  stats.zero_variance.assign(static_cast<std::size_t>(mean.size()), false);
  for (Eigen::Index c = 0; c < mean.size(); ++c) {
    const double var = std::max(0.0, second_moment(c) - mean(c) * mean(c));
    double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean(c)))) {
      sd = 1.0;
      stats.zero_variance[static_cast<std::size_t>(c)] = true;
    }
    stats.stddev(c) = sd;
  }
  return stats;
}

}  // namespace

NormStats fit_normalizer(const Matrix& values) {
  if (values.rows() == 0) throw DataError("fit_normalizer: empty series");
  const double n = static_cast<double>(values.rows());
  const Vector mean = values.colwise().mean();
  const Vector second = values.array().square().colwise().mean().matrix();
  (void)n;
  return stats_from_moments(mean, second);
}

NormStats fit_normalizer(const std::vector<Window>& windows, Eigen::Index channels) {
  if (windows.empty()) throw DataError("fit_normalizer: no windows");
  Vector sum = Vector::Zero(channels);
  Vector sum_sq = Vector::Zero(channels);
  double count = 0.0;
  for (const auto& w : windows) {
    if (w.values.rows() != channels) {
      throw ShapeError("fit_normalizer: window channel count mismatch");
    }
    sum += w.values.rowwise().sum();
    sum_sq += w.values.array().square().rowwise().sum().matrix();
    count += static_cast<double>(w.values.cols());
  }
  return stats_from_moments(sum / count, sum_sq / count);
}

Matrix apply_normalizer(const Matrix& values, const NormStats& stats) {
  if (values.cols() != stats.mean.size()) {
    throw ShapeError("apply_normalizer: channel count mismatch");
  }
  return (values.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.stddev.transpose().array();
}

Window apply_normalizer(const Window& window, const NormStats& stats) {
  if (window.values.rows() != stats.mean.size()) {
    throw ShapeError("apply_normalizer: window channel count mismatch");
  }
  Window out;
  out.label = window.label;
  out.values = (window.values.colwise() - stats.mean).array().colwise() /
               stats.stddev.array();
  return out;
}

std::vector<Window> apply_normalizer(std::vector<Window> windows, const NormStats& stats) {
  for (auto& w : windows) w = apply_normalizer(w, stats);
  return windows;
}

Matrix invert_normalizer(const Matrix& values, const NormStats& stats) {
  if (values.cols() != stats.mean.size()) {
    throw ShapeError("invert_normalizer: channel count mismatch");
  }
  return (values.array().rowwise() * stats.stddev.transpose().array())
             .rowwise() +
         stats.mean.transpose().array();
}

SegmentResult segment_windows(const RawSeries& series, Eigen::Index d, Eigen::Index w) {
  if (d <= 0 || w <= 0) throw ConfigError("segment_windows: d and w must be positive");
  SegmentResult result;
  const Eigen::Index t_len = series.length();
  if (t_len < d) {
    result.series_shorter_than_window = true;
    return result;
  }
  for (Eigen::Index start = 0; start + d <= t_len; start += w) {
    Window win;
    win.values = series.values.middleRows(start, d).transpose();  // k x d
    // Most frequent label over the d records, smallest id on ties.
    std::map<int, int> histogram;
    for (Eigen::Index t = start; t < start + d; ++t) {
      ++histogram[series.labels[static_cast<std::size_t>(t)]];
    }
    int best_label = histogram.begin()->first;
    int best_count = histogram.begin()->second;
    for (const auto& [label, count] : histogram) {
      if (count > best_count) {
        best_label = label;
        best_count = count;
      }
    }
    win.label = best_label;
    result.windows.push_back(std::move(win));
  }
  return result;
}

const char* to_string(Category c) {
  switch (c) {
    case Category::White: return "W";
    case Category::Black: return "B";
    case Category::Gray: return "G";
  }
  return "?";
}

void InferencePartition::validate() const {
  for (int label : white) {
    if (black.count(label) || gray.count(label)) {
      throw ConfigError("partition lists overlap at label " + std::to_string(label));
    }
  }
  for (int label : black) {
    if (gray.count(label)) {
      throw ConfigError("partition lists overlap at label " + std::to_string(label));
    }
  }
}

Category InferencePartition::category_of(int label) const {
  if (white.count(label)) return Category::White;
  if (black.count(label)) return Category::Black;
  if (gray.count(label)) return Category::Gray;
  throw ConfigError("label " + std::to_string(label) + " is not in any inference list");
}

bool InferencePartition::contains(int label) const {
  return white.count(label) || black.count(label) || gray.count(label);
}

PartitionedWindows partition_windows(const std::vector<Window>& windows,
                                     const InferencePartition& partition) {
  partition.validate();
  PartitionedWindows out;
  for (const auto& w : windows) {
    switch (partition.category_of(w.label)) {
      case Category::White: out.white.push_back(w); break;
      case Category::Black: out.black.push_back(w); break;
      case Category::Gray: out.gray.push_back(w); break;
    }
  }
  return out;
}

std::vector<Window> downsample_class(const std::vector<Window>& windows,
                                     int class_id, double keep_fraction,
                                     std::uint64_t seed) {
  if (keep_fraction <= 0.0 || keep_fraction > 1.0) {
    throw ConfigError("downsample_class: keep_fraction must be in (0, 1]");
  }
  std::vector<std::size_t> member_indices;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].label == class_id) member_indices.push_back(i);
  }
  const auto keep_count = static_cast<std::size_t>(
      std::llround(keep_fraction * static_cast<double>(member_indices.size())));
  Rng rng(seed);
  rng.shuffle(member_indices);
  member_indices.resize(keep_count);
  std::vector<bool> keep(windows.size(), false);
  for (std::size_t i : member_indices) keep[i] = true;

  std::vector<Window> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].label != class_id || keep[i]) out.push_back(windows[i]);
  }
  return out;
}

std::pair<std::vector<Window>, std::vector<Window>> split_train_test(
    const std::vector<Window>& windows, double train_fraction, std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw ConfigError("split_train_test: train_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(windows.size())));
  std::vector<bool> in_train(windows.size(), false);
  for (std::size_t i = 0; i < n_train && i < order.size(); ++i) in_train[order[i]] = true;

  std::vector<Window> train, test;
  train.reserve(n_train);
  test.reserve(windows.size() - n_train);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    (in_train[i] ? train : test).push_back(windows[i]);
  }
  return {std::move(train), std::move(test)};
}

RawSeries gen_synthetic(const SyntheticConfig& config) {
  if (config.white_classes < 1 || config.black_classes < 1 || config.gray_classes < 1) {
    throw ConfigError("gen_synthetic: every list needs at least one class");
  }
  if (config.channels < 1 || config.windows_per_class < 1 || config.window_len < 1) {
    throw ConfigError("gen_synthetic: channels, windows_per_class and window_len must be positive");
  }
  const int n_classes = config.total_classes();
  const Eigen::Index run_len = config.windows_per_class * config.window_len;
  const Eigen::Index total_len = run_len * n_classes;

  RawSeries series;
  series.channels = config.channels;
  series.sample_rate_hz = config.sample_rate_hz;
  series.values.resize(total_len, config.channels);
  series.labels.resize(static_cast<std::size_t>(total_len));

  Rng rng(config.seed);
  Rng phase_rng = rng.fork(1);
  Rng noise_rng = rng.fork(2);

  const double d = static_cast<double>(config.window_len);
  for (int cls = 0; cls < n_classes; ++cls) {
    const double f1 = 1.0 + cls + config.frequency_shift;
    const double f2 = 2.0 * (cls + 1) + 2.0 * config.frequency_shift;
    const double amp1 = 1.0 + config.amplitude_shift;
    const double amp2 = 0.4 + 0.5 * config.amplitude_shift;
    std::vector<double> phase1(static_cast<std::size_t>(config.channels));
    std::vector<double> phase2(static_cast<std::size_t>(config.channels));
    std::vector<double> offset(static_cast<std::size_t>(config.channels));
    for (Eigen::Index c = 0; c < config.channels; ++c) {
      phase1[static_cast<std::size_t>(c)] = phase_rng.uniform(0.0, 2.0 * M_PI);
      phase2[static_cast<std::size_t>(c)] = phase_rng.uniform(0.0, 2.0 * M_PI);
      // Deterministic class/channel offsets keep per-class means apart.
      const double direction = (c % 2 == 0) ? 1.0 : -1.0;
      const double channel_scale = 1.0 + 0.3 * static_cast<double>(c) /
                                             static_cast<double>(config.channels);
      offset[static_cast<std::size_t>(c)] =
          direction * channel_scale *
              (static_cast<double>(cls) - 0.5 * (n_classes - 1)) +
          config.offset_shift * direction;
    }
    const Eigen::Index base = run_len * cls;
    for (Eigen::Index t = 0; t < run_len; ++t) {
      series.labels[static_cast<std::size_t>(base + t)] = cls;
      const double phase_arg = 2.0 * M_PI * static_cast<double>(t) / d;
      for (Eigen::Index c = 0; c < config.channels; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        series.values(base + t, c) =
            offset[ci] + amp1 * std::sin(f1 * phase_arg + phase1[ci]) +
            amp2 * std::sin(f2 * phase_arg + phase2[ci]) +
            config.noise_std * noise_rng.normal();
      }
    }
  }
  return series;
}

InferencePartition synthetic_partition(const SyntheticConfig& config) {
  InferencePartition partition;
  int next = 0;
  for (int i = 0; i < config.gray_classes; ++i) partition.gray.insert(next++);
  for (int i = 0; i < config.white_classes; ++i) partition.white.insert(next++);
  for (int i = 0; i < config.black_classes; ++i) partition.black.insert(next++);
  return partition;
}

}  // namespace raekit::data
