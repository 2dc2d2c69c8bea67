#include "raekit/threatgan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "raekit/rae.hpp"

namespace raekit::threat {

namespace {

nn::Matrix sample_noise(Rng& rng, Eigen::Index rows, Eigen::Index noise_dim) {
  nn::Matrix z(rows, noise_dim);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < noise_dim; ++j) z(i, j) = rng.normal();
  }
  return z;
}

double fraction_above(const nn::Matrix& scores) {
  std::int64_t above = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (scores(i, 0) > 0.5) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(scores.rows());
}

}  // namespace

nn::Matrix stack_window_rows(const std::vector<Window>& windows) {
  if (windows.empty()) throw DataError("stack_window_rows: no windows");
  const Eigen::Index k = windows.front().values.rows();
  const Eigen::Index d = windows.front().values.cols();
  nn::Matrix rows(static_cast<Eigen::Index>(windows.size()), k * d);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = rae::flatten_window(windows[i]);
  }
  return rows;
}

Gan train_gan(const std::vector<Window>& gray_windows, Eigen::Index channels,
              Eigen::Index window_len, const GanConfig& config) {
  if (gray_windows.empty()) throw DataError("train_gan: gray window set is empty");

  const Eigen::Index inp = channels * window_len;
  const Eigen::Index hidden = std::max<Eigen::Index>(1, inp / 4);

  Gan gan;
  gan.config = config;
  gan.channels = channels;
  gan.window_len = window_len;

  Rng seed_source(config.seed);
  Rng g_init = seed_source.fork(1);
  Rng d_init = seed_source.fork(2);
  Rng batch_rng = seed_source.fork(3);
  gan.generator = nn::make_network({config.noise_dim, hidden, inp},
                                   {nn::Activation::Selu, nn::Activation::Linear},
                                   g_init);
  gan.discriminator = nn::make_network({inp, hidden, 1},
                                       {nn::Activation::Selu, nn::Activation::Sigmoid},
                                       d_init);

  nn::OptimizerConfig g_config, d_config;
  g_config.learning_rate = config.generator_lr;
  d_config.learning_rate = config.discriminator_lr;
  nn::Optimizer g_opt(g_config, gan.generator);
  nn::Optimizer d_opt(d_config, gan.discriminator);

  const nn::Matrix real_rows = stack_window_rows(gray_windows);
  if (real_rows.cols() != inp) throw ShapeError("train_gan: window shape mismatch");
  const Eigen::Index n = real_rows.rows();
  const Eigen::Index batch = std::max<Eigen::Index>(1, config.batch_size);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    batch_rng.shuffle(order);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index count = std::min(batch, n - start);

      // Discriminator update: real windows labeled 1, generator output 0.
      nn::Matrix real_batch(count, inp);
      for (Eigen::Index r = 0; r < count; ++r) {
        real_batch.row(r) = real_rows.row(order[static_cast<std::size_t>(start + r)]);
      }
      const nn::Matrix fake_batch =
          nn::forward(gan.generator, sample_noise(batch_rng, count, config.noise_dim));
      nn::Matrix d_inputs(2 * count, inp);
      d_inputs.topRows(count) = real_batch;
      d_inputs.bottomRows(count) = fake_batch;
      nn::Matrix d_targets(2 * count, 1);
      d_targets.topRows(count).setOnes();
      d_targets.bottomRows(count).setZero();
      nn::ForwardCache d_cache = nn::forward_cached(gan.discriminator, d_inputs);
      const double d_loss =
          nn::loss_eval(nn::Loss::BinaryCrossEntropy, d_cache.output, d_targets);
      if (!std::isfinite(d_loss)) {
        throw TrainingError("GAN discriminator diverged at epoch " +
                                std::to_string(epoch),
                            epoch);
      }
      d_opt.step(gan.discriminator,
                 nn::backprop(gan.discriminator, d_cache, d_targets,
                              nn::Loss::BinaryCrossEntropy));

      // Generator update(s) through the frozen discriminator: make D say real.
      for (int g_step = 0; g_step < std::max(1, config.generator_steps); ++g_step) {
        const nn::Matrix z = sample_noise(batch_rng, count, config.noise_dim);
        nn::ForwardCache g_cache = nn::forward_cached(gan.generator, z);
        nn::ForwardCache dg_cache =
            nn::forward_cached(gan.discriminator, g_cache.output);
        const nn::Matrix ones = nn::Matrix::Ones(count, 1);
        const double g_loss =
            nn::loss_eval(nn::Loss::BinaryCrossEntropy, dg_cache.output, ones);
        if (!std::isfinite(g_loss)) {
          throw TrainingError(
              "GAN generator diverged at epoch " + std::to_string(epoch), epoch);
        }
        const nn::Matrix d_out_grad =
            nn::loss_gradient(nn::Loss::BinaryCrossEntropy, dg_cache.output, ones);
        const nn::Matrix g_out_grad =
            nn::backprop_through(gan.discriminator, dg_cache, d_out_grad).second;
        g_opt.step(gan.generator,
                   nn::backprop_through(gan.generator, g_cache, g_out_grad).first);
      }
    }
    if (std::find(config.snapshot_epochs.begin(), config.snapshot_epochs.end(),
                  epoch) != config.snapshot_epochs.end()) {
      gan.snapshots.push_back({epoch, gan.generator, gan.discriminator});
    }
  }
  return gan;
}

AttackRow four_way_eval(const GanSnapshot& snapshot, Eigen::Index noise_dim,
                        const nn::Matrix& real_rows, const nn::Matrix& fake_rows,
                        int n_generated, std::uint64_t eval_seed) {
  if (real_rows.rows() == 0 || fake_rows.rows() == 0 || n_generated <= 0) {
    throw DataError("four_way_eval: empty input set");
  }
  AttackRow row = cross_user_eval(snapshot, real_rows, fake_rows);

  Rng rng(eval_seed);
  const nn::Matrix generated =
      nn::forward(snapshot.generator, sample_noise(rng, n_generated, noise_dim));
  const nn::Matrix scores = nn::forward(snapshot.discriminator, generated);
  row.generated = 1.0 - fraction_above(scores);

  // Highest-scored decile as rated by D: the hardest samples to reject.
  std::vector<Eigen::Index> by_score(static_cast<std::size_t>(n_generated));
  std::iota(by_score.begin(), by_score.end(), Eigen::Index{0});
  std::stable_sort(by_score.begin(), by_score.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores(a, 0) > scores(b, 0);
  });
  const auto decile = static_cast<std::size_t>(std::max(1, n_generated / 10));
  std::int64_t rejected = 0;
  for (std::size_t i = 0; i < decile; ++i) {
    if (scores(by_score[i], 0) <= 0.5) ++rejected;
  }
  row.generated_top_decile = static_cast<double>(rejected) / static_cast<double>(decile);
  return row;
}

AttackRow cross_user_eval(const GanSnapshot& snapshot, const nn::Matrix& real_rows,
                          const nn::Matrix& fake_rows) {
  if (real_rows.rows() == 0 || fake_rows.rows() == 0) {
    throw DataError("cross_user_eval: empty input set");
  }
  AttackRow row;
  row.epoch = snapshot.epoch;
  row.real_gray = fraction_above(nn::forward(snapshot.discriminator, real_rows));
  row.fake_gray = 1.0 - fraction_above(nn::forward(snapshot.discriminator, fake_rows));
  row.non_informative = row.real_gray < 0.5 && row.fake_gray > 0.5;
  return row;
}

AttackReport attack_curve(const Gan& gan, const nn::Matrix& real_rows,
                          const nn::Matrix& fake_rows, int n_generated,
                          std::uint64_t eval_seed) {
  AttackReport report;
  for (const auto& snapshot : gan.snapshots) {
    report.rows.push_back(four_way_eval(
        snapshot, gan.config.noise_dim, real_rows, fake_rows, n_generated,
        Rng(eval_seed).fork(static_cast<std::uint64_t>(snapshot.epoch)).seed()));
  }
  return report;
}

AttackReport cross_user_curve(const Gan& gan, const nn::Matrix& real_rows,
                              const nn::Matrix& fake_rows) {
  AttackReport report;
  for (const auto& snapshot : gan.snapshots) {
    report.rows.push_back(cross_user_eval(snapshot, real_rows, fake_rows));
  }
  return report;
}

void write_attack_csv(const AttackReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto cell = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  out << "epoch,real_gray,fake_gray,generated,generated_top10,non_informative\n";
  for (const auto& row : report.rows) {
    out << row.epoch << ',' << cell(row.real_gray) << ',' << cell(row.fake_gray) << ',';
    if (row.generated) out << cell(*row.generated);
    out << ',';
    if (row.generated_top_decile) out << cell(*row.generated_top_decile);
    out << ',' << (row.non_informative ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace raekit::threat
