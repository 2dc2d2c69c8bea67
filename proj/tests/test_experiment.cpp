#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "raekit/experiment.hpp"

using namespace raekit;
using experiment::ArtifactPaths;
using experiment::ExperimentConfig;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

ExperimentConfig tiny_config(const std::filesystem::path& out) {
  auto config = testutil::small_benchmark_config(out, 42, 20);
  config.rae_epochs = 8;
  config.classifier_epochs = 8;
  config.gan.epochs = 4;
  config.gan.snapshot_epochs = {1, 4};
  config.gan_generated = 50;
  experiment::CrossUserConfig cross;
  config.cross_user = cross;
  return config;
}

}  // namespace

TEST_SUITE_BEGIN("experiment");

TEST_CASE("config: JSON parsing picks up every section") {
  const auto j = nlohmann::json::parse(R"({
    "out": "runs/exp1",
    "k": 4, "d": 20, "w": 2, "seed": 7,
    "partition": {"white": [1, 2], "black": [3], "gray": [0]},
    "dataset": {"synthetic": {"white_classes": 2, "black_classes": 1,
                               "gray_classes": 1, "windows_per_class": 50,
                               "noise_std": 0.3}},
    "prepare": {"train_fraction": 0.75, "decimate": 2,
                "downsample": {"class": 0, "keep": 0.25}},
    "rae": {"profile": "shallow", "epochs": 10, "batch_size": 64,
            "learning_rate": 0.002},
    "classifier": {"epochs": 12},
    "gan": {"noise_dim": 32, "epochs": 20, "snapshot_epochs": [1, 20],
            "n_generated": 500,
            "cross_user": {"frequency_shift": 0.7, "seed_offset": 5}}
  })");
  const auto config = ExperimentConfig::from_json(j);
  CHECK(config.out == std::filesystem::path("runs/exp1"));
  CHECK(config.channels == 4);
  CHECK(config.window_len == 20);
  CHECK(config.window_step == 2);
  CHECK(config.seed == 7);
  REQUIRE(config.partition.has_value());
  CHECK(config.partition->white == std::set<int>{1, 2});
  REQUIRE(config.synthetic.has_value());
  CHECK(config.synthetic->windows_per_class == 50);
  CHECK(config.synthetic->channels == 4);  // derived from k
  CHECK(config.train_fraction == 0.75);
  CHECK(config.decimate == 2);
  REQUIRE(config.downsample.has_value());
  CHECK(config.downsample->keep_fraction == 0.25);
  CHECK(config.rae_profile == rae::Profile::Shallow);
  CHECK(config.rae_epochs == 10);
  CHECK(config.classifier_epochs == 12);
  CHECK(config.gan.noise_dim == 32);
  CHECK(config.gan_generated == 500);
  REQUIRE(config.cross_user.has_value());
  CHECK(config.cross_user->frequency_shift == 0.7);
}

TEST_CASE("config: invalid settings are configuration errors") {
  nlohmann::json base;
  base["dataset"]["synthetic"] = nlohmann::json::object();

  auto bad = base;
  bad["prepare"]["train_fraction"] = 1.5;
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);

  bad = base;
  bad["gan"]["snapshot_epochs"] = {500};  // past the end of training
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);

  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::object()), ConfigError);

  nlohmann::json csv_only;
  csv_only["dataset"]["csv"] = "data.csv";  // csv without a partition
  CHECK_THROWS_AS(ExperimentConfig::from_json(csv_only), ConfigError);
}

TEST_CASE("config: to_json/from_json round trip") {
  const auto config = tiny_config("somewhere");
  const auto back = ExperimentConfig::from_json(config.to_json());
  CHECK(back.channels == config.channels);
  CHECK(back.seed == config.seed);
  CHECK(back.synthetic->windows_per_class == config.synthetic->windows_per_class);
  CHECK(back.gan.snapshot_epochs == config.gan.snapshot_epochs);
  CHECK(back.cross_user.has_value());
}

TEST_CASE("config: stage seeds differ per stage and repeat per master seed") {
  const auto config = tiny_config("x");
  CHECK(config.stage_seed(1) != config.stage_seed(2));
  CHECK(config.stage_seed(1) == config.stage_seed(1));
}

TEST_CASE("prepare_windows: split sizes and train-fitted normalization") {
  const auto config = tiny_config(testutil::temp_dir("exp_prepare"));
  const auto prepared = experiment::prepare_windows(
      config, experiment::make_series(config),
      config.stage_seed(experiment::kSeedSplit),
      config.stage_seed(experiment::kSeedDownsample));

  const std::size_t total = prepared.train.windows.size() + prepared.test.windows.size();
  CHECK(prepared.train.windows.size() ==
        static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(total))));

  // Stats were fitted on the train windows, so train normalizes to mean ~0,
  // std ~1 per channel.
  const auto refit = data::fit_normalizer(prepared.train.windows, config.channels);
  for (Eigen::Index c = 0; c < config.channels; ++c) {
    CHECK(refit.mean(c) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(refit.stddev(c) == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (const auto& w : prepared.test.windows) CHECK(w.values.allFinite());
}

TEST_CASE("pipeline: gen-data, prepare, train-rae, evaluate write their artifacts") {
  const auto out = testutil::temp_dir("exp_pipeline") / "run";
  const auto config = tiny_config(out);
  const ArtifactPaths paths{out};

  experiment::cmd_gen_data(config);
  CHECK(std::filesystem::exists(paths.data_csv()));
  CHECK(std::filesystem::exists(paths.data_user_b_csv()));

  experiment::cmd_prepare(config);
  CHECK(std::filesystem::exists(paths.train_windows()));
  CHECK(std::filesystem::exists(paths.test_windows()));

  experiment::cmd_train_rae(config);
  CHECK(std::filesystem::exists(paths.rae_model()));

  const auto report = experiment::cmd_evaluate(config);
  CHECK(std::filesystem::exists(paths.classifier_model()));
  CHECK(std::filesystem::exists(paths.f1_report()));
  CHECK(std::filesystem::exists(paths.confusion_original()));
  CHECK(std::filesystem::exists(paths.confusion_transformed()));
  CHECK(std::filesystem::exists(paths.report_text()));
  CHECK(report.original_f1.white >= 0.0);

  // Window archives round-trip through the RAEWINDS container.
  const auto train = io::load_windows(paths.train_windows());
  CHECK(train.channels == config.channels);
  CHECK(train.window_len == config.window_len);
  CHECK_FALSE(train.windows.empty());
}

TEST_CASE("pipeline: transform command applies the model to an archive") {
  const auto out = testutil::temp_dir("exp_transform") / "run";
  const auto config = tiny_config(out);
  experiment::cmd_gen_data(config);
  experiment::cmd_prepare(config);
  experiment::cmd_train_rae(config);

  const ArtifactPaths paths{out};
  const auto transformed_path = out / "transformed.winds";
  experiment::cmd_transform(config, paths.test_windows(), transformed_path);

  const auto original = io::load_windows(paths.test_windows());
  const auto transformed = io::load_windows(transformed_path);
  const auto model = rae::load_model(paths.rae_model());
  REQUIRE(original.windows.size() == transformed.windows.size());
  // Spot-check a few windows; stored at float32, so compare at that scale.
  for (std::size_t i = 0; i < original.windows.size(); i += 37) {
    const auto expected = rae::transform_window(model, original.windows[i]);
    CHECK((expected.values.cast<float>() - transformed.windows[i].values.cast<float>())
              .cwiseAbs()
              .maxCoeff() == 0.0f);
  }
}

TEST_CASE("pipeline: attack command writes same-user and cross-user curves") {
  const auto out = testutil::temp_dir("exp_attack") / "run";
  const auto config = tiny_config(out);
  experiment::cmd_gen_data(config);
  experiment::cmd_prepare(config);
  experiment::cmd_train_rae(config);
  experiment::cmd_attack(config);

  const ArtifactPaths paths{out};
  REQUIRE(std::filesystem::exists(paths.attack_same_user()));
  REQUIRE(std::filesystem::exists(paths.attack_cross_user()));
  const std::string same = slurp(paths.attack_same_user());
  CHECK(same.rfind("epoch,", 0) == 0);
  // One row per snapshot epoch plus the header.
  CHECK(std::count(same.begin(), same.end(), '\n') ==
        static_cast<long>(config.gan.snapshot_epochs.size()) + 1);
}

TEST_CASE("pipeline: identical configs produce byte-identical reports") {
  const auto base = testutil::temp_dir("exp_determinism");
  auto config_a = tiny_config(base / "a");
  auto config_b = tiny_config(base / "b");

  for (const auto& config : {config_a, config_b}) {
    experiment::cmd_gen_data(config);
    experiment::cmd_prepare(config);
    experiment::cmd_train_rae(config);
    experiment::cmd_evaluate(config);
  }
  const ArtifactPaths pa{base / "a"}, pb{base / "b"};
  CHECK(slurp(pa.f1_report()) == slurp(pb.f1_report()));
  CHECK(slurp(pa.confusion_original()) == slurp(pb.confusion_original()));
  CHECK(slurp(pa.confusion_transformed()) == slurp(pb.confusion_transformed()));
  CHECK(slurp(pa.rae_model()) == slurp(pb.rae_model()));
}

TEST_SUITE_END();
