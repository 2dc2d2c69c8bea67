#include <doctest.h>

#include <fstream>
#include <map>

#include "helpers.hpp"
#include "raekit/evalharness.hpp"

using namespace raekit;
using data::Category;
using data::Window;

namespace {

data::InferencePartition wbg_partition() {
  data::InferencePartition partition;
  partition.gray = {0};
  partition.white = {1, 2, 3};
  partition.black = {4, 5};
  return partition;
}

// Independent per-class F1 for the brute-force macro check. Mirrors the
// list-restricted convention: only pairs whose truth is in the list count.
double oracle_class_f1(const std::vector<int>& preds, const std::vector<int>& truths,
                       const std::set<int>& list, int label) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!list.count(truths[i])) continue;
    const bool predicted = preds[i] == label;
    const bool actual = truths[i] == label;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && actual) ++fn;
  }
  const double p = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
  const double r = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

struct EvalBench {
  experiment::ExperimentConfig config;
  experiment::PreparedData prepared;
  eval::Classifier classifier;
  rae::TrainedRae model;
};

const EvalBench& eval_bench() {
  static const EvalBench bench = [] {
    EvalBench b{testutil::small_benchmark_config(testutil::temp_dir("eval_bench")),
                {}, {}, {}};
    b.prepared = experiment::prepare_windows(
        b.config, experiment::make_series(b.config),
        b.config.stage_seed(experiment::kSeedSplit),
        b.config.stage_seed(experiment::kSeedDownsample));
    eval::ClassifierTrainOptions options;
    options.epochs = b.config.classifier_epochs;
    options.seed = b.config.stage_seed(experiment::kSeedClassifier);
    b.classifier = eval::train_classifier(b.prepared.train.windows, options);

    const auto partition = b.config.resolved_partition();
    const auto split = data::partition_windows(b.prepared.train.windows, partition);
    const auto pairs = rae::build_replacement_pairs(
        split.white, split.black, split.gray,
        b.config.stage_seed(experiment::kSeedPairs));
    rae::RaeTrainOptions rae_options;
    rae_options.epochs = b.config.rae_epochs;
    rae_options.seed = b.config.stage_seed(experiment::kSeedRae);
    b.model = rae::train_rae(pairs,
                             rae::build_rae_topology(b.config.channels,
                                                     b.config.window_len,
                                                     rae::Profile::Deep),
                             b.prepared.train.stats, partition, rae_options)
                  .model;
    return b;
  }();
  return bench;
}

}  // namespace

TEST_SUITE_BEGIN("evalharness");

TEST_CASE("f1: perfect predictions give 1 for every list") {
  const std::vector<int> truths{0, 1, 2, 3, 4, 5, 1, 4};
  const auto scores = eval::f1_per_list(truths, truths, wbg_partition());
  CHECK(scores.white == 1.0);
  CHECK(scores.black == 1.0);
  CHECK(scores.gray == 1.0);
}

TEST_CASE("f1: TP=2 FP=1 FN=1 gives 2/3 via the harmonic mean") {
  // Class 1 inside the white list: two hits, one false positive coming from
  // a class-2 section, one miss. Class 2 scores 0, so the white macro is
  // (2/3 + 0) / 2.
  const std::vector<int> truths{1, 1, 1, 2};
  const std::vector<int> preds{1, 1, 0, 1};
  data::InferencePartition partition;
  partition.white = {1, 2};
  partition.gray = {0};
  const auto scores = eval::f1_per_list(preds, truths, partition);
  CHECK(scores.white == doctest::Approx((2.0 / 3.0 + 0.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("f1: class absent from truths and predictions is excluded") {
  // White list is {1,2}; class 2 never appears, so white F1 is class 1's.
  const std::vector<int> truths{1, 1, 0};
  const std::vector<int> preds{1, 1, 0};
  data::InferencePartition partition;
  partition.white = {1, 2};
  partition.gray = {0};
  const auto scores = eval::f1_per_list(preds, truths, partition);
  CHECK(scores.white == 1.0);
}

TEST_CASE("f1: macro average matches brute force on random small sets") {
  Rng rng(17);
  const auto partition = wbg_partition();
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = static_cast<std::size_t>(1 + rng.integer(20));
    std::vector<int> truths(n), preds(n);
    for (std::size_t i = 0; i < n; ++i) {
      truths[i] = static_cast<int>(rng.integer(6));
      preds[i] = static_cast<int>(rng.integer(6));
    }
    const auto scores = eval::f1_per_list(preds, truths, partition);
    const auto oracle_list = [&](const std::set<int>& list) {
      double sum = 0.0;
      int counted = 0;
      for (int label : list) {
        bool seen = false;
        for (std::size_t i = 0; i < truths.size(); ++i) {
          if (!list.count(truths[i])) continue;
          if (truths[i] == label || preds[i] == label) seen = true;
        }
        if (!seen) continue;
        sum += oracle_class_f1(preds, truths, list, label);
        ++counted;
      }
      return counted == 0 ? 0.0 : sum / counted;
    };
    CHECK(scores.white == doctest::Approx(oracle_list(partition.white)).epsilon(1e-12));
    CHECK(scores.black == doctest::Approx(oracle_list(partition.black)).epsilon(1e-12));
    CHECK(scores.gray == doctest::Approx(oracle_list(partition.gray)).epsilon(1e-12));
    for (double f1 : {scores.white, scores.black, scores.gray}) {
      CHECK(f1 >= 0.0);
      CHECK(f1 <= 1.0);
    }
  }
}

TEST_CASE("confusion: perfect predictions are diagonal") {
  const std::vector<int> truths{0, 1, 4, 2, 5, 0};
  const auto matrix = eval::category_confusion(truths, truths, wbg_partition());
  CHECK(matrix[0][0] == 2);  // white: labels 1, 2
  CHECK(matrix[1][1] == 2);  // black: labels 4, 5
  CHECK(matrix[2][2] == 2);  // gray: label 0 twice
  std::int64_t off_diagonal = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      if (r != c) off_diagonal += matrix[r][c];
    }
  }
  CHECK(off_diagonal == 0);
}

TEST_CASE("confusion: black predicted as gray lands in row B, column G") {
  const std::vector<int> truths{4, 4, 5};
  const std::vector<int> preds{0, 0, 0};
  const auto matrix = eval::category_confusion(preds, truths, wbg_partition());
  CHECK(matrix[1][2] == 3);
  CHECK(matrix[1][0] == 0);
  CHECK(matrix[1][1] == 0);
}

TEST_CASE("confusion: total mass equals the number of windows") {
  Rng rng(23);
  std::vector<int> truths, preds;
  for (int i = 0; i < 57; ++i) {
    truths.push_back(static_cast<int>(rng.integer(6)));
    preds.push_back(static_cast<int>(rng.integer(6)));
  }
  const auto matrix = eval::category_confusion(preds, truths, wbg_partition());
  std::int64_t total = 0;
  for (const auto& row : matrix) {
    for (std::int64_t cell : row) total += cell;
  }
  CHECK(total == 57);
}

TEST_CASE("confusion: unknown class id is an error") {
  const std::vector<int> truths{9};
  CHECK_THROWS_AS(eval::category_confusion(truths, truths, wbg_partition()),
                  ConfigError);
}

TEST_CASE("train_classifier: degenerate training sets are errors") {
  CHECK_THROWS_AS(eval::train_classifier({}, {}), DataError);
  std::vector<Window> single(5);
  for (auto& w : single) {
    w.label = 1;
    w.values = data::Matrix::Zero(2, 3);
  }
  CHECK_THROWS_AS(eval::train_classifier(single, {}), DataError);
}

TEST_CASE("train_classifier: same seed gives the same model") {
  const auto& bench = eval_bench();
  eval::ClassifierTrainOptions options;
  options.epochs = 2;
  options.seed = 77;
  const auto a = eval::train_classifier(bench.prepared.train.windows, options);
  const auto b = eval::train_classifier(bench.prepared.train.windows, options);
  for (std::size_t i = 0; i < a.network.layers.size(); ++i) {
    CHECK(a.network.layers[i].weights == b.network.layers[i].weights);
  }
}

TEST_CASE("classifier reaches high accuracy on separable originals") {
  const auto& bench = eval_bench();
  const auto preds = eval::predict(bench.classifier, bench.prepared.test.windows);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == bench.prepared.test.windows[i].label) ++hits;
  }
  CHECK(static_cast<double>(hits) >= 0.9 * static_cast<double>(preds.size()));
}

TEST_CASE("predict: repeated window gives identical predictions in a class id") {
  const auto& bench = eval_bench();
  const Window& w = bench.prepared.test.windows.front();
  const auto preds = eval::predict(bench.classifier, {w, w});
  REQUIRE(preds.size() == 2);
  CHECK(preds[0] == preds[1]);
  CHECK(std::find(bench.classifier.class_ids.begin(), bench.classifier.class_ids.end(),
                  preds[0]) != bench.classifier.class_ids.end());
}

TEST_CASE("predict: adding a constant to all logits does not change argmax") {
  const auto& bench = eval_bench();
  eval::Classifier shifted = bench.classifier;
  shifted.network.layers.back().bias.array() += 7.5;  // softmax shift invariance
  const auto base = eval::predict(bench.classifier, bench.prepared.test.windows);
  const auto moved = eval::predict(shifted, bench.prepared.test.windows);
  CHECK(base == moved);
}

TEST_CASE("evaluate_pipeline: identity-stub model keeps OF1 == TF1") {
  const auto& bench = eval_bench();
  // Identity network of the right shape stands in for the trained RAE.
  rae::TrainedRae identity;
  const Eigen::Index inp = bench.config.channels * bench.config.window_len;
  nn::DenseLayer layer;
  layer.weights = nn::Matrix::Identity(inp, inp);
  layer.bias = nn::Vector::Zero(inp);
  layer.activation = nn::Activation::Linear;
  identity.network.layers.push_back(layer);
  identity.topology.channels = bench.config.channels;
  identity.topology.window_len = bench.config.window_len;
  identity.topology.hidden_sizes = {inp, inp, inp, inp, inp};
  identity.norm_stats = bench.prepared.train.stats;
  identity.partition = bench.config.resolved_partition();

  const auto report =
      eval::evaluate_pipeline(bench.classifier, identity, bench.prepared.test.windows);
  CHECK(report.original_f1.white == report.transformed_f1.white);
  CHECK(report.original_f1.black == report.transformed_f1.black);
  CHECK(report.original_f1.gray == report.transformed_f1.gray);
  CHECK(report.original_confusion == report.transformed_confusion);
}

TEST_CASE("evaluate_pipeline: privacy and utility directions on the benchmark") {
  const auto& bench = eval_bench();
  const auto report =
      eval::evaluate_pipeline(bench.classifier, bench.model, bench.prepared.test.windows);

  CHECK(report.original_f1.white >= 0.9);
  CHECK(report.original_f1.black >= 0.9);
  CHECK(report.original_f1.gray >= 0.9);
  // Privacy direction: black recognition collapses.
  CHECK(report.transformed_f1.black < 0.1 * report.original_f1.black);
  // Utility direction: white and gray hold up.
  CHECK(report.transformed_f1.white >= report.original_f1.white - 0.05);
  CHECK(report.transformed_f1.gray >= report.original_f1.gray - 0.05);
}

TEST_CASE("report CSV and text emitters") {
  const auto& bench = eval_bench();
  const auto report =
      eval::evaluate_pipeline(bench.classifier, bench.model, bench.prepared.test.windows);
  const auto dir = testutil::temp_dir("eval_io");

  eval::write_f1_csv(report, dir / "f1.csv");
  std::ifstream f1(dir / "f1.csv");
  std::string header, row1;
  std::getline(f1, header);
  std::getline(f1, row1);
  CHECK(header == "list,condition,f1");
  CHECK(row1.rfind("white,original,", 0) == 0);

  eval::write_confusion_csv(report.original_confusion, dir / "confusion.csv");
  std::ifstream cm(dir / "confusion.csv");
  std::getline(cm, header);
  CHECK(header == "true_category,W,B,G");

  const std::string text = eval::render_report_text(report);
  CHECK(text.find("OF1") != std::string::npos);
  CHECK(text.find("confusion transformed") != std::string::npos);
}

TEST_CASE("classifier save/load round trip preserves predictions") {
  const auto& bench = eval_bench();
  const auto dir = testutil::temp_dir("eval_io");
  const auto path = dir / "classifier.bin";
  eval::save_classifier(bench.classifier, path);
  const auto loaded = eval::load_classifier(path);
  CHECK(loaded.class_ids == bench.classifier.class_ids);
  const auto a = eval::predict(bench.classifier, bench.prepared.test.windows);
  const auto b = eval::predict(loaded, bench.prepared.test.windows);
  CHECK(a == b);
}

TEST_SUITE_END();
