#include "raekit/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "raekit/containers.hpp"

namespace raekit::eval {

namespace {

nn::Matrix stack_rows(const std::vector<Window>& windows, Eigen::Index channels,
                      Eigen::Index window_len) {
  nn::Matrix rows(static_cast<Eigen::Index>(windows.size()), channels * window_len);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].values.rows() != channels ||
        windows[i].values.cols() != window_len) {
      throw ShapeError("classifier: window shape mismatch");
    }
    rows.row(static_cast<Eigen::Index>(i)) = rae::flatten_window(windows[i]);
  }
  return rows;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

Classifier train_classifier(const std::vector<Window>& windows,
                            const ClassifierTrainOptions& options) {
  if (windows.empty()) throw DataError("train_classifier: empty training set");

  std::set<int> labels;
  for (const auto& w : windows) labels.insert(w.label);
  if (labels.size() < 2) {
    throw DataError("train_classifier: need at least 2 classes, got " +
                    std::to_string(labels.size()));
  }

  Classifier clf;
  clf.class_ids.assign(labels.begin(), labels.end());
  clf.channels = windows.front().values.rows();
  clf.window_len = windows.front().values.cols();

  const Eigen::Index inp = clf.channels * clf.window_len;
  const Eigen::Index n_classes = static_cast<Eigen::Index>(clf.class_ids.size());
  const Eigen::Index h1 = std::max<Eigen::Index>(n_classes, inp / 4);
  const Eigen::Index h2 = std::max<Eigen::Index>(n_classes, inp / 16);

  const nn::Matrix inputs = stack_rows(windows, clf.channels, clf.window_len);
  nn::Matrix targets =
      nn::Matrix::Zero(static_cast<Eigen::Index>(windows.size()), n_classes);
  std::map<int, Eigen::Index> column_of;
  for (std::size_t i = 0; i < clf.class_ids.size(); ++i) {
    column_of[clf.class_ids[i]] = static_cast<Eigen::Index>(i);
  }
  for (std::size_t i = 0; i < windows.size(); ++i) {
    targets(static_cast<Eigen::Index>(i), column_of[windows[i].label]) = 1.0;
  }

  Rng seed_source(options.seed);
  Rng init_rng = seed_source.fork(1);
  nn::Network net = nn::make_network(
      {inp, h1, h2, n_classes},
      {nn::Activation::Selu, nn::Activation::Selu, nn::Activation::Softmax},
      init_rng);

  nn::FitOptions fit_options;
  fit_options.loss = nn::Loss::CategoricalCrossEntropy;
  fit_options.epochs = options.epochs;
  fit_options.batch_size = options.batch_size;
  fit_options.seed = seed_source.fork(2).seed();
  fit_options.optimizer = options.optimizer;
  nn::fit(net, inputs, targets, fit_options);

  clf.network = io::quantize_to_f32(std::move(net));
  return clf;
}

std::vector<int> predict(const Classifier& clf, const std::vector<Window>& windows) {
  if (windows.empty()) return {};
  const nn::Matrix rows = stack_rows(windows, clf.channels, clf.window_len);
  const nn::Matrix scores = nn::forward(clf.network, rows);
  std::vector<int> out(windows.size());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = clf.class_ids[static_cast<std::size_t>(best)];
  }
  return out;
}

// Each list is scored on the sections that truly belong to it: for list L,
// only pairs with truth in L enter the counts, and the per-class F1s of L's
// members are macro-averaged. Replaced black sections therefore do not
// appear as gray false positives (the replacement is the intended outcome,
// not a gray-list mistake), and a list whose sections are never recognized
// as their own classes scores exactly 0.
ListScores f1_per_list(const std::vector<int>& predictions,
                       const std::vector<int>& truths,
                       const InferencePartition& partition) {
  if (predictions.size() != truths.size()) {
    throw ShapeError("f1_per_list: predictions and truths differ in length");
  }
  const auto list_f1 = [&](const std::set<int>& list) {
    std::map<int, std::int64_t> tp, fp, fn;
    std::set<int> seen;
    for (std::size_t i = 0; i < truths.size(); ++i) {
      if (!list.count(truths[i])) continue;
      seen.insert(truths[i]);
      if (list.count(predictions[i])) seen.insert(predictions[i]);
      if (predictions[i] == truths[i]) {
        ++tp[truths[i]];
      } else {
        ++fp[predictions[i]];
        ++fn[truths[i]];
      }
    }
    double sum = 0.0;
    int counted = 0;
    for (int label : list) {
      if (!seen.count(label)) continue;  // absent from truths and predictions
      const double tp_c = static_cast<double>(tp.count(label) ? tp.at(label) : 0);
      const double fp_c = static_cast<double>(fp.count(label) ? fp.at(label) : 0);
      const double fn_c = static_cast<double>(fn.count(label) ? fn.at(label) : 0);
      const double denom = 2.0 * tp_c + fp_c + fn_c;
      sum += denom == 0.0 ? 0.0 : 2.0 * tp_c / denom;
      ++counted;
    }
    return counted == 0 ? 0.0 : sum / counted;
  };
  ListScores scores;
  scores.white = list_f1(partition.white);
  scores.black = list_f1(partition.black);
  scores.gray = list_f1(partition.gray);
  return scores;
}

ConfusionMatrix category_confusion(const std::vector<int>& predictions,
                                   const std::vector<int>& truths,
                                   const InferencePartition& partition) {
  if (predictions.size() != truths.size()) {
    throw ShapeError("category_confusion: predictions and truths differ in length");
  }
  ConfusionMatrix matrix{};
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const auto row = static_cast<std::size_t>(partition.category_of(truths[i]));
    const auto col = static_cast<std::size_t>(partition.category_of(predictions[i]));
    ++matrix[row][col];
  }
  return matrix;
}

EvalReport evaluate_pipeline(const Classifier& clf, const rae::TrainedRae& model,
                             const std::vector<Window>& test_windows) {
  EvalReport report;
  std::vector<int> truths;
  truths.reserve(test_windows.size());
  for (const auto& w : test_windows) truths.push_back(w.label);

  const std::vector<int> original_preds = predict(clf, test_windows);
  report.original_f1 = f1_per_list(original_preds, truths, model.partition);
  report.original_confusion = category_confusion(original_preds, truths, model.partition);

  std::vector<Window> transformed;
  transformed.reserve(test_windows.size());
  for (const auto& w : test_windows) transformed.push_back(rae::transform_window(model, w));
  const std::vector<int> transformed_preds = predict(clf, transformed);
  report.transformed_f1 = f1_per_list(transformed_preds, truths, model.partition);
  report.transformed_confusion =
      category_confusion(transformed_preds, truths, model.partition);
  return report;
}

void write_f1_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "list,condition,f1\n";
  const std::array<std::pair<const char*, const ListScores*>, 2> conditions{
      {{"original", &report.original_f1}, {"transformed", &report.transformed_f1}}};
  for (const auto& [condition, scores] : conditions) {
    out << "white," << condition << ',' << format_score(scores->white) << '\n';
    out << "black," << condition << ',' << format_score(scores->black) << '\n';
    out << "gray," << condition << ',' << format_score(scores->gray) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_confusion_csv(const ConfusionMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "true_category,W,B,G\n";
  const std::array<const char*, 3> names{"W", "B", "G"};
  for (std::size_t r = 0; r < 3; ++r) {
    out << names[r];
    for (std::size_t c = 0; c < 3; ++c) out << ',' << matrix[r][c];
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::string render_report_text(const EvalReport& report) {
  std::ostringstream out;
  out << "list   OF1       TF1\n";
  const std::array<std::pair<const char*, Category>, 3> lists{
      {{"white", Category::White}, {"black", Category::Black}, {"gray", Category::Gray}}};
  for (const auto& [name, category] : lists) {
    out << name;
    for (std::size_t pad = std::string(name).size(); pad < 7; ++pad) out << ' ';
    out << format_score(report.original_f1.for_category(category)) << "  "
        << format_score(report.transformed_f1.for_category(category)) << '\n';
  }
  const auto print_matrix = [&out](const char* title, const ConfusionMatrix& m) {
    out << title << " (rows true, cols predicted; W/B/G)\n";
    for (const auto& row : m) {
      out << "  " << row[0] << ' ' << row[1] << ' ' << row[2] << '\n';
    }
  };
  print_matrix("confusion original", report.original_confusion);
  print_matrix("confusion transformed", report.transformed_confusion);
  return out.str();
}

void save_classifier(const Classifier& clf, const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["model_kind"] = "classifier";
  meta["k"] = clf.channels;
  meta["d"] = clf.window_len;
  meta["class_ids"] = clf.class_ids;
  io::save_network_container(path, meta, clf.network);
}

Classifier load_classifier(const std::filesystem::path& path) {
  io::NetworkContainer container = io::load_network_container(path);
  const auto& meta = container.metadata;
  if (meta.value("model_kind", "") != "classifier") {
    throw ParseError(path.string() + ": not a classifier model");
  }
  Classifier clf;
  clf.network = std::move(container.network);
  clf.channels = meta.at("k").get<Eigen::Index>();
  clf.window_len = meta.at("d").get<Eigen::Index>();
  clf.class_ids = meta.at("class_ids").get<std::vector<int>>();
  if (clf.network.output_dim() != static_cast<Eigen::Index>(clf.class_ids.size())) {
    throw ParseError(path.string() + ": class count disagrees with network output");
  }
  return clf;
}

}  // namespace raekit::eval
