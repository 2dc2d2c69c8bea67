#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <set>
#include <utility>
#include <vector>

#include "raekit/errors.hpp"
#include "raekit/rng.hpp"

// Loading, cleaning, normalizing, windowing and partitioning of multichannel
// labeled time-series, plus the synthetic benchmark generator.
namespace raekit::data {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// values is T x k with NaN marking missing samples; labels has length T.
struct RawSeries {
  Eigen::Index channels = 0;
  Matrix values;
  std::vector<int> labels;
  double sample_rate_hz = 0.0;  // metadata only

  Eigen::Index length() const { return values.rows(); }
};

// CSV dataset format: one record per line, `label,ch1,...,chk`; missing
// value = empty field or literal NaN; lines starting with `#` are comments.
RawSeries load_csv(const std::filesystem::path& path, Eigen::Index channels);
void save_csv(const RawSeries& series, const std::filesystem::path& path);

// Linear interpolation of interior gaps per channel against sample index;
// leading/trailing gaps hold the nearest present value. A channel with no
// present values at all is a DataError.
RawSeries interpolate_missing(RawSeries series);

// Keep every n-th record (98 Hz -> 30 Hz style integer decimation).
RawSeries decimate(const RawSeries& series, int keep_every);

struct NormStats {
  Vector mean;                      // per channel
  Vector stddev;                    // population convention, never 0
  std::vector<bool> zero_variance;  // channels whose stddev was replaced by 1
};

// One k x d section: channels by rows, time by columns.
struct Window {
  Matrix values;
  int label = 0;
};

// Population standard deviation (divide by n). A zero-variance channel gets
// stddev 1 and its flag set.
NormStats fit_normalizer(const Matrix& values);
NormStats fit_normalizer(const std::vector<Window>& windows, Eigen::Index channels);

Matrix apply_normalizer(const Matrix& values, const NormStats& stats);
Window apply_normalizer(const Window& window, const NormStats& stats);
std::vector<Window> apply_normalizer(std::vector<Window> windows, const NormStats& stats);

// Inverse transform, back to raw sensor units.
Matrix invert_normalizer(const Matrix& values, const NormStats& stats);

// Sliding segmentation: starts at 0, w, 2w, ... while start + d <= T; the
// window label is the most frequent label among its d records, ties broken
// by the smallest class id. T < d yields no windows and sets the flag.
struct SegmentResult {
  std::vector<Window> windows;
  bool series_shorter_than_window = false;
};

SegmentResult segment_windows(const RawSeries& series, Eigen::Index d, Eigen::Index w);

// The three disjoint inference lists.
enum class Category { White = 0, Black = 1, Gray = 2 };

const char* to_string(Category c);

struct InferencePartition {
  std::set<int> white;
  std::set<int> black;
  std::set<int> gray;

  // Throws ConfigError if the lists overlap.
  void validate() const;
  // Throws ConfigError naming the label if it is in no list.
  Category category_of(int label) const;
  bool contains(int label) const;
};

struct PartitionedWindows {
  std::vector<Window> white;
  std::vector<Window> black;
  std::vector<Window> gray;
};

PartitionedWindows partition_windows(const std::vector<Window>& windows,
                                     const InferencePartition& partition);

// Randomly keeps round(keep_fraction * n) windows of class_id, preserving
// input order; all other windows pass through untouched.
std::vector<Window> downsample_class(const std::vector<Window>& windows,
                                     int class_id, double keep_fraction,
                                     std::uint64_t seed);

// Disjoint, exhaustive, order-preserving; train gets round(fraction * n).
std::pair<std::vector<Window>, std::vector<Window>> split_train_test(
    const std::vector<Window>& windows, double train_fraction,
    std::uint64_t seed);

// Synthetic benchmark: each class emits one contiguous run of
// windows_per_class * window_len samples of a class-specific waveform
// (distinct offsets, frequencies and amplitudes plus Gaussian noise), so a
// classifier can reach high F1 on originals. Class ids are assigned gray
// first, then white, then black. The *_shift knobs derive a second "user"
// whose waveforms differ in ways that survive per-channel normalization.
struct SyntheticConfig {
  int white_classes = 3;
  int black_classes = 2;
  int gray_classes = 1;
  Eigen::Index channels = 6;
  Eigen::Index windows_per_class = 300;
  Eigen::Index window_len = 30;
  double noise_std = 0.25;
  double frequency_shift = 0.0;
  double amplitude_shift = 0.0;
  double offset_shift = 0.0;
  double sample_rate_hz = 30.0;
  std::uint64_t seed = 0;

  int total_classes() const { return white_classes + black_classes + gray_classes; }
};

RawSeries gen_synthetic(const SyntheticConfig& config);

// The partition matching gen_synthetic's class id layout.
InferencePartition synthetic_partition(const SyntheticConfig& config);

}  // namespace raekit::data
