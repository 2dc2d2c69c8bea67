#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "raekit/containers.hpp"
#include "raekit/dataio.hpp"
#include "raekit/evalharness.hpp"
#include "raekit/rae.hpp"
#include "raekit/threatgan.hpp"

// Experiment configuration and the file-based pipeline stages behind the
// CLI subcommands. Every stage is deterministic given the config, and every
// artifact lands under the configured output directory.
namespace raekit::experiment {

struct DownsampleRule {
  int class_id = 0;
  double keep_fraction = 1.0;
};

struct CrossUserConfig {
  // Synthetic route: derive a second user by shifting waveform parameters.
  double frequency_shift = 0.5;
  double amplitude_shift = 0.4;
  double offset_shift = 0.0;
  std::uint64_t seed_offset = 101;
  // CSV route: the other user's dataset in the same format.
  std::optional<std::filesystem::path> csv;
};

struct ExperimentConfig {
  std::filesystem::path out = "artifacts";
  Eigen::Index channels = 6;    // k
  Eigen::Index window_len = 30; // d
  Eigen::Index window_step = 3; // w
  std::uint64_t seed = 42;

  std::optional<data::SyntheticConfig> synthetic;  // channels/d/seed filled in
  std::optional<std::filesystem::path> csv;

  std::optional<data::InferencePartition> partition;

  double train_fraction = 0.8;
  int decimate = 1;
  std::optional<DownsampleRule> downsample;

  rae::Profile rae_profile = rae::Profile::Deep;
  int rae_epochs = 30;
  int rae_batch = 128;
  double rae_learning_rate = 1e-3;

  int classifier_epochs = 30;
  int classifier_batch = 128;
  double classifier_learning_rate = 1e-3;

  threat::GanConfig gan;
  int gan_generated = 1000;
  std::optional<CrossUserConfig> cross_user;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Throws ConfigError on anything a run cannot proceed with.
  void validate() const;

  // The partition to use: explicit one, or derived from the synthetic layout.
  data::InferencePartition resolved_partition() const;

  // Stable per-stage seed streams derived from the master seed.
  std::uint64_t stage_seed(std::uint64_t stage) const;
};

// Pipeline stage seed stream ids.
inline constexpr std::uint64_t kSeedData = 1;
inline constexpr std::uint64_t kSeedSplit = 2;
inline constexpr std::uint64_t kSeedDownsample = 3;
inline constexpr std::uint64_t kSeedPairs = 4;
inline constexpr std::uint64_t kSeedRae = 5;
inline constexpr std::uint64_t kSeedClassifier = 6;
inline constexpr std::uint64_t kSeedGan = 7;
inline constexpr std::uint64_t kSeedAttackEval = 8;
inline constexpr std::uint64_t kSeedUserB = 9;

struct ArtifactPaths {
  std::filesystem::path out;

  std::filesystem::path data_csv() const { return out / "data.csv"; }
  std::filesystem::path data_user_b_csv() const { return out / "data_user_b.csv"; }
  std::filesystem::path train_windows() const { return out / "train.winds"; }
  std::filesystem::path test_windows() const { return out / "test.winds"; }
  std::filesystem::path rae_model() const { return out / "rae_model.bin"; }
  std::filesystem::path classifier_model() const { return out / "classifier_model.bin"; }
  std::filesystem::path f1_report() const { return out / "f1_report.csv"; }
  std::filesystem::path confusion_original() const { return out / "confusion_original.csv"; }
  std::filesystem::path confusion_transformed() const {
    return out / "confusion_transformed.csv";
  }
  std::filesystem::path report_text() const { return out / "report.txt"; }
  std::filesystem::path attack_same_user() const { return out / "attack_same_user.csv"; }
  std::filesystem::path attack_cross_user() const { return out / "attack_cross_user.csv"; }
};

// The per-subcommand drivers. Each reads its inputs from the artifact
// directory (or the config) and writes its outputs there.
void cmd_gen_data(const ExperimentConfig& config);
void cmd_prepare(const ExperimentConfig& config);
void cmd_train_rae(const ExperimentConfig& config);
void cmd_transform(const ExperimentConfig& config, const std::filesystem::path& in,
                   const std::filesystem::path& out);
void cmd_train_classifier(const ExperimentConfig& config);
eval::EvalReport cmd_evaluate(const ExperimentConfig& config);
void cmd_attack(const ExperimentConfig& config);

// In-memory helpers shared by the commands and the test suites.
data::RawSeries make_series(const ExperimentConfig& config);
data::RawSeries make_user_b_series(const ExperimentConfig& config);

struct PreparedData {
  io::WindowArchive train;
  io::WindowArchive test;
};

// interpolate -> decimate -> window -> downsample -> split -> normalize with
// train-fitted statistics.
PreparedData prepare_windows(const ExperimentConfig& config,
                             const data::RawSeries& series,
                             std::uint64_t split_seed, std::uint64_t downsample_seed);

}  // namespace raekit::experiment
