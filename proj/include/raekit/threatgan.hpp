#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "raekit/dataio.hpp"
#include "raekit/nn.hpp"

// Adversarial detectability study: train a GAN on gray-listed windows, then
// measure how well its discriminator separates real gray windows from
// RAE-transformed black windows ("fake gray"), same-user and cross-user.
namespace raekit::threat {

using data::Window;

struct GanConfig {
  Eigen::Index noise_dim = 64;
  int epochs = 100;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double discriminator_lr = 1e-3;
  double generator_lr = 1e-3;
  int generator_steps = 1;  // generator updates per discriminator update
  std::vector<int> snapshot_epochs = {1, 5, 10, 20, 30, 50, 70, 100};
};

// Dense GAN: generator noise -> inp/4 (selu) -> inp (linear); discriminator
// inp -> inp/4 (selu) -> 1 (sigmoid).
struct GanSnapshot {
  int epoch = 0;
  nn::Network generator;
  nn::Network discriminator;
};

struct Gan {
  nn::Network generator;
  nn::Network discriminator;
  GanConfig config;
  Eigen::Index channels = 0;
  Eigen::Index window_len = 0;
  std::vector<GanSnapshot> snapshots;
};

Gan train_gan(const std::vector<Window>& gray_windows, Eigen::Index channels,
              Eigen::Index window_len, const GanConfig& config);

// Discriminator accuracy per input category at the 0.5 threshold: real
// inputs count when scored > 0.5, fakes when scored <= 0.5. The top-decile
// row rescores the highest-rated generated samples. The non_informative
// flag marks a discriminator that calls most inputs fake, real ones
// included.
struct AttackRow {
  int epoch = 0;
  double real_gray = 0.0;
  double fake_gray = 0.0;
  std::optional<double> generated;
  std::optional<double> generated_top_decile;
  bool non_informative = false;
};

struct AttackReport {
  std::vector<AttackRow> rows;
};

// real_rows/fake_rows are flattened windows, one per row.
AttackRow four_way_eval(const GanSnapshot& snapshot, Eigen::Index noise_dim,
                        const nn::Matrix& real_rows, const nn::Matrix& fake_rows,
                        int n_generated, std::uint64_t eval_seed);

// Same thresholds restricted to real/fake; used when the discriminator was
// trained on a different user's gray data.
AttackRow cross_user_eval(const GanSnapshot& snapshot, const nn::Matrix& real_rows,
                          const nn::Matrix& fake_rows);

// One four_way_eval (or cross_user_eval) row per retained snapshot.
AttackReport attack_curve(const Gan& gan, const nn::Matrix& real_rows,
                          const nn::Matrix& fake_rows, int n_generated,
                          std::uint64_t eval_seed);
AttackReport cross_user_curve(const Gan& gan, const nn::Matrix& real_rows,
                              const nn::Matrix& fake_rows);

// epoch,real_gray,fake_gray,generated,generated_top10,non_informative with
// empty cells for the categories a row does not carry.
void write_attack_csv(const AttackReport& report, const std::filesystem::path& path);

nn::Matrix stack_window_rows(const std::vector<Window>& windows);

}  // namespace raekit::threat
