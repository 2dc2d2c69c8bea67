#include "raekit/experiment.hpp"

#include <fstream>
#include <iostream>

namespace raekit::experiment {

namespace {

data::InferencePartition partition_or_throw(const ExperimentConfig& config) {
  return config.resolved_partition();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  try {
    config.out = j.value("out", std::string("artifacts"));
    config.channels = j.value("k", config.channels);
    config.window_len = j.value("d", config.window_len);
    config.window_step = j.value("w", config.window_step);
    config.seed = j.value("seed", config.seed);

    if (j.contains("partition")) {
      config.partition = io::partition_from_json(j.at("partition"));
    }

    if (j.contains("dataset")) {
      const auto& dataset = j.at("dataset");
      if (dataset.contains("csv")) {
        config.csv = std::filesystem::path(dataset.at("csv").get<std::string>());
      }
      if (dataset.contains("synthetic")) {
        const auto& s = dataset.at("synthetic");
        data::SyntheticConfig synthetic;
        synthetic.white_classes = s.value("white_classes", synthetic.white_classes);
        synthetic.black_classes = s.value("black_classes", synthetic.black_classes);
        synthetic.gray_classes = s.value("gray_classes", synthetic.gray_classes);
        synthetic.windows_per_class =
            s.value("windows_per_class", synthetic.windows_per_class);
        synthetic.noise_std = s.value("noise_std", synthetic.noise_std);
        synthetic.sample_rate_hz = s.value("sample_rate_hz", synthetic.sample_rate_hz);
        config.synthetic = synthetic;
      }
    }

    if (j.contains("prepare")) {
      const auto& p = j.at("prepare");
      config.train_fraction = p.value("train_fraction", config.train_fraction);
      config.decimate = p.value("decimate", config.decimate);
      if (p.contains("downsample")) {
        DownsampleRule rule;
        rule.class_id = p.at("downsample").at("class").get<int>();
        rule.keep_fraction = p.at("downsample").at("keep").get<double>();
        config.downsample = rule;
      }
    }

    if (j.contains("rae")) {
      const auto& r = j.at("rae");
      config.rae_profile = rae::profile_from_string(r.value("profile", "deep"));
      config.rae_epochs = r.value("epochs", config.rae_epochs);
      config.rae_batch = r.value("batch_size", config.rae_batch);
      config.rae_learning_rate = r.value("learning_rate", config.rae_learning_rate);
    }

    if (j.contains("classifier")) {
      const auto& c = j.at("classifier");
      config.classifier_epochs = c.value("epochs", config.classifier_epochs);
      config.classifier_batch = c.value("batch_size", config.classifier_batch);
      config.classifier_learning_rate =
          c.value("learning_rate", config.classifier_learning_rate);
    }

    if (j.contains("gan")) {
      const auto& g = j.at("gan");
      config.gan.noise_dim = g.value("noise_dim", config.gan.noise_dim);
      config.gan.epochs = g.value("epochs", config.gan.epochs);
      config.gan.batch_size = g.value("batch_size", config.gan.batch_size);
      if (g.contains("learning_rate")) {
        config.gan.discriminator_lr = g.at("learning_rate").get<double>();
        config.gan.generator_lr = config.gan.discriminator_lr;
      }
      config.gan.discriminator_lr =
          g.value("discriminator_lr", config.gan.discriminator_lr);
      config.gan.generator_lr = g.value("generator_lr", config.gan.generator_lr);
      config.gan.generator_steps = g.value("generator_steps", config.gan.generator_steps);
      if (g.contains("snapshot_epochs")) {
        config.gan.snapshot_epochs = g.at("snapshot_epochs").get<std::vector<int>>();
      }
      config.gan_generated = g.value("n_generated", config.gan_generated);
      if (g.contains("cross_user")) {
        const auto& x = g.at("cross_user");
        CrossUserConfig cross;
        cross.frequency_shift = x.value("frequency_shift", cross.frequency_shift);
        cross.amplitude_shift = x.value("amplitude_shift", cross.amplitude_shift);
        cross.offset_shift = x.value("offset_shift", cross.offset_shift);
        cross.seed_offset = x.value("seed_offset", cross.seed_offset);
        if (x.contains("csv")) {
          cross.csv = std::filesystem::path(x.at("csv").get<std::string>());
        }
        config.cross_user = cross;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }

  if (config.synthetic) {
    config.synthetic->channels = config.channels;
    config.synthetic->window_len = config.window_len;
    config.synthetic->seed = config.stage_seed(kSeedData);
  }
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["out"] = out.string();
  j["k"] = channels;
  j["d"] = window_len;
  j["w"] = window_step;
  j["seed"] = seed;
  if (partition) j["partition"] = io::to_json(*partition);
  if (synthetic) {
    j["dataset"]["synthetic"] = {{"white_classes", synthetic->white_classes},
                                 {"black_classes", synthetic->black_classes},
                                 {"gray_classes", synthetic->gray_classes},
                                 {"windows_per_class", synthetic->windows_per_class},
                                 {"noise_std", synthetic->noise_std},
                                 {"sample_rate_hz", synthetic->sample_rate_hz}};
  }
  if (csv) j["dataset"]["csv"] = csv->string();
  j["prepare"] = {{"train_fraction", train_fraction}, {"decimate", decimate}};
  if (downsample) {
    j["prepare"]["downsample"] = {{"class", downsample->class_id},
                                  {"keep", downsample->keep_fraction}};
  }
  j["rae"] = {{"profile", rae::to_string(rae_profile)},
              {"epochs", rae_epochs},
              {"batch_size", rae_batch},
              {"learning_rate", rae_learning_rate}};
  j["classifier"] = {{"epochs", classifier_epochs},
                     {"batch_size", classifier_batch},
                     {"learning_rate", classifier_learning_rate}};
  j["gan"] = {{"noise_dim", gan.noise_dim},
              {"epochs", gan.epochs},
              {"batch_size", gan.batch_size},
              {"discriminator_lr", gan.discriminator_lr},
              {"generator_lr", gan.generator_lr},
              {"generator_steps", gan.generator_steps},
              {"snapshot_epochs", gan.snapshot_epochs},
              {"n_generated", gan_generated}};
  if (cross_user) {
    j["gan"]["cross_user"] = {{"frequency_shift", cross_user->frequency_shift},
                              {"amplitude_shift", cross_user->amplitude_shift},
                              {"offset_shift", cross_user->offset_shift},
                              {"seed_offset", cross_user->seed_offset}};
    if (cross_user->csv) j["gan"]["cross_user"]["csv"] = cross_user->csv->string();
  }
  return j;
}

void ExperimentConfig::validate() const {
  if (channels < 1) throw ConfigError("k must be >= 1");
  if (window_len < 1) throw ConfigError("d must be >= 1");
  if (window_step < 1) throw ConfigError("w must be >= 1");
  if (!synthetic && !csv) throw ConfigError("dataset: need synthetic or csv");
  if (!synthetic && !partition) {
    throw ConfigError("a csv dataset needs an explicit partition");
  }
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }
  if (decimate < 1) throw ConfigError("decimate must be >= 1");
  if (downsample &&
      (downsample->keep_fraction <= 0.0 || downsample->keep_fraction > 1.0)) {
    throw ConfigError("downsample keep must be in (0, 1]");
  }
  if (rae_epochs < 1 || classifier_epochs < 1 || gan.epochs < 1) {
    throw ConfigError("epoch counts must be >= 1");
  }
  if (rae_batch < 1 || classifier_batch < 1 || gan.batch_size < 1) {
    throw ConfigError("batch sizes must be >= 1");
  }
  if (gan_generated < 1) throw ConfigError("gan n_generated must be >= 1");
  if (gan.snapshot_epochs.empty()) throw ConfigError("gan snapshot_epochs is empty");
  for (int e : gan.snapshot_epochs) {
    if (e < 1 || e > gan.epochs) {
      throw ConfigError("gan snapshot epoch " + std::to_string(e) +
                        " outside 1.." + std::to_string(gan.epochs));
    }
  }
  if (partition) partition->validate();
  if (cross_user && !cross_user->csv && !synthetic) {
    throw ConfigError("cross_user without csv requires a synthetic dataset");
  }
}

data::InferencePartition ExperimentConfig::resolved_partition() const {
  if (partition) return *partition;
  if (synthetic) return data::synthetic_partition(*synthetic);
  throw ConfigError("no partition configured");
}

std::uint64_t ExperimentConfig::stage_seed(std::uint64_t stage) const {
  return Rng(seed).fork(stage).seed();
}

data::RawSeries make_series(const ExperimentConfig& config) {
  if (config.synthetic) return data::gen_synthetic(*config.synthetic);
  if (config.csv) return data::load_csv(*config.csv, config.channels);
  throw ConfigError("no dataset configured");
}

data::RawSeries make_user_b_series(const ExperimentConfig& config) {
  if (!config.cross_user) throw ConfigError("cross_user is not configured");
  if (config.cross_user->csv) {
    return data::load_csv(*config.cross_user->csv, config.channels);
  }
  if (!config.synthetic) {
    throw ConfigError("synthetic cross_user requires a synthetic dataset");
  }
  data::SyntheticConfig user_b = *config.synthetic;
  user_b.frequency_shift += config.cross_user->frequency_shift;
  user_b.amplitude_shift += config.cross_user->amplitude_shift;
  user_b.offset_shift += config.cross_user->offset_shift;
  user_b.seed = Rng(config.stage_seed(kSeedUserB))
                    .fork(config.cross_user->seed_offset)
                    .seed();
  return data::gen_synthetic(user_b);
}

PreparedData prepare_windows(const ExperimentConfig& config,
                             const data::RawSeries& series,
                             std::uint64_t split_seed, std::uint64_t downsample_seed) {
  data::RawSeries cleaned = data::interpolate_missing(series);
  if (config.decimate > 1) cleaned = data::decimate(cleaned, config.decimate);

  data::SegmentResult segmented =
      data::segment_windows(cleaned, config.window_len, config.window_step);
  if (segmented.windows.empty()) {
    throw DataError("prepare: series shorter than one window");
  }
  std::vector<data::Window> windows = std::move(segmented.windows);
  if (config.downsample) {
    windows = data::downsample_class(windows, config.downsample->class_id,
                                     config.downsample->keep_fraction,
                                     downsample_seed);
  }
  auto [train, test] =
      data::split_train_test(windows, config.train_fraction, split_seed);

  const data::NormStats stats = data::fit_normalizer(train, config.channels);
  PreparedData prepared;
  prepared.train.channels = config.channels;
  prepared.train.window_len = config.window_len;
  prepared.train.stats = stats;
  prepared.train.windows = data::apply_normalizer(std::move(train), stats);
  prepared.test.channels = config.channels;
  prepared.test.window_len = config.window_len;
  prepared.test.stats = stats;
  prepared.test.windows = data::apply_normalizer(std::move(test), stats);
  return prepared;
}

void cmd_gen_data(const ExperimentConfig& config) {
  if (!config.synthetic) {
    throw ConfigError("gen-data requires a synthetic dataset spec");
  }
  const ArtifactPaths paths{config.out};
  std::filesystem::create_directories(config.out);
  data::save_csv(make_series(config), paths.data_csv());
  if (config.cross_user && !config.cross_user->csv) {
    data::save_csv(make_user_b_series(config), paths.data_user_b_csv());
  }
}

void cmd_prepare(const ExperimentConfig& config) {
  const ArtifactPaths paths{config.out};
  std::filesystem::create_directories(config.out);

  data::RawSeries series;
  if (config.synthetic && std::filesystem::exists(paths.data_csv())) {
    series = data::load_csv(paths.data_csv(), config.channels);
  } else {
    series = make_series(config);
  }
  PreparedData prepared = prepare_windows(config, series,
                                          config.stage_seed(kSeedSplit),
                                          config.stage_seed(kSeedDownsample));

  // Fail now rather than at train time if some label is in no list.
  const data::InferencePartition partition = partition_or_throw(config);
  for (const auto& w : prepared.train.windows) partition.category_of(w.label);
  for (const auto& w : prepared.test.windows) partition.category_of(w.label);

  io::save_windows(paths.train_windows(), prepared.train);
  io::save_windows(paths.test_windows(), prepared.test);
}

void cmd_train_rae(const ExperimentConfig& config) {
  const ArtifactPaths paths{config.out};
  const io::WindowArchive train = io::load_windows(paths.train_windows());
  const data::InferencePartition partition = partition_or_throw(config);

  const data::PartitionedWindows split =
      data::partition_windows(train.windows, partition);
  const std::vector<rae::ReplacementPair> pairs = rae::build_replacement_pairs(
      split.white, split.black, split.gray, config.stage_seed(kSeedPairs));

  const rae::RaeTopology topology = rae::build_rae_topology(
      config.channels, config.window_len, config.rae_profile);
  rae::RaeTrainOptions options;
  options.epochs = config.rae_epochs;
  options.batch_size = config.rae_batch;
  options.seed = config.stage_seed(kSeedRae);
  options.optimizer.learning_rate = config.rae_learning_rate;

  const rae::RaeTrainResult result =
      rae::train_rae(pairs, topology, train.stats, partition, options);
  rae::save_model(result.model, paths.rae_model());
}

void cmd_transform(const ExperimentConfig& config, const std::filesystem::path& in,
                   const std::filesystem::path& out) {
  const ArtifactPaths paths{config.out};
  const rae::TrainedRae model = rae::load_model(paths.rae_model());
  io::WindowArchive archive = io::load_windows(in);
  for (auto& window : archive.windows) {
    window = rae::transform_window(model, window);
  }
  io::save_windows(out, archive);
}

void cmd_train_classifier(const ExperimentConfig& config) {
  const ArtifactPaths paths{config.out};
  const io::WindowArchive train = io::load_windows(paths.train_windows());
  eval::ClassifierTrainOptions options;
  options.epochs = config.classifier_epochs;
  options.batch_size = config.classifier_batch;
  options.seed = config.stage_seed(kSeedClassifier);
  options.optimizer.learning_rate = config.classifier_learning_rate;
  const eval::Classifier clf = eval::train_classifier(train.windows, options);
  eval::save_classifier(clf, paths.classifier_model());
}

eval::EvalReport cmd_evaluate(const ExperimentConfig& config) {
  const ArtifactPaths paths{config.out};
  if (!std::filesystem::exists(paths.classifier_model())) {
    cmd_train_classifier(config);
  }
  const eval::Classifier clf = eval::load_classifier(paths.classifier_model());
  const rae::TrainedRae model = rae::load_model(paths.rae_model());
  const io::WindowArchive test = io::load_windows(paths.test_windows());

  const eval::EvalReport report = eval::evaluate_pipeline(clf, model, test.windows);
  eval::write_f1_csv(report, paths.f1_report());
  eval::write_confusion_csv(report.original_confusion, paths.confusion_original());
  eval::write_confusion_csv(report.transformed_confusion, paths.confusion_transformed());
  std::ofstream text(paths.report_text());
  if (!text) throw IoError("cannot open " + paths.report_text().string());
  text << eval::render_report_text(report);
  return report;
}

namespace {

struct AttackInputs {
  nn::Matrix real_rows;  // held-out real gray windows
  nn::Matrix fake_rows;  // RAE transforms of held-out black windows
};

AttackInputs make_attack_inputs(const ExperimentConfig& config,
                                const io::WindowArchive& test,
                                const rae::TrainedRae& model) {
  const data::PartitionedWindows split =
      data::partition_windows(test.windows, model.partition);
  if (split.gray.empty()) throw DataError("attack: no gray test windows");
  if (split.black.empty()) throw DataError("attack: no black test windows");
  std::vector<data::Window> fakes;
  fakes.reserve(split.black.size());
  for (const auto& w : split.black) fakes.push_back(rae::transform_window(model, w));
  (void)config;
  return {threat::stack_window_rows(split.gray), threat::stack_window_rows(fakes)};
}

}  // namespace

void cmd_attack(const ExperimentConfig& config) {
  const ArtifactPaths paths{config.out};
  const rae::TrainedRae model = rae::load_model(paths.rae_model());
  const io::WindowArchive train = io::load_windows(paths.train_windows());
  const io::WindowArchive test = io::load_windows(paths.test_windows());

  const AttackInputs inputs = make_attack_inputs(config, test, model);

  // Same-user attack: GAN trained on this user's gray training windows.
  const data::PartitionedWindows train_split =
      data::partition_windows(train.windows, model.partition);
  threat::GanConfig gan_config = config.gan;
  gan_config.seed = config.stage_seed(kSeedGan);
  const threat::Gan same_user = threat::train_gan(
      train_split.gray, config.channels, config.window_len, gan_config);
  const threat::AttackReport same_report =
      threat::attack_curve(same_user, inputs.real_rows, inputs.fake_rows,
                           config.gan_generated, config.stage_seed(kSeedAttackEval));
  threat::write_attack_csv(same_report, paths.attack_same_user());

  // Cross-user attack: GAN trained on another user's gray data, probing this
  // user's real and fake gray windows.
  if (config.cross_user) {
    const data::RawSeries user_b = make_user_b_series(config);
    const PreparedData prepared_b =
        prepare_windows(config, user_b,
                        Rng(config.stage_seed(kSeedUserB)).fork(1).seed(),
                        Rng(config.stage_seed(kSeedUserB)).fork(2).seed());
    const data::PartitionedWindows split_b =
        data::partition_windows(prepared_b.train.windows, config.resolved_partition());
    threat::GanConfig gan_b = config.gan;
    gan_b.seed = Rng(config.stage_seed(kSeedUserB)).fork(3).seed();
    const threat::Gan cross_user = threat::train_gan(
        split_b.gray, config.channels, config.window_len, gan_b);
    const threat::AttackReport cross_report =
        threat::cross_user_curve(cross_user, inputs.real_rows, inputs.fake_rows);
    threat::write_attack_csv(cross_report, paths.attack_cross_user());
  }
}

}  // namespace raekit::experiment
