#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raekit/dataio.hpp"
#include "raekit/nn.hpp"
#include "raekit/rae.hpp"

// Third-party stand-in classifier plus the utility/privacy report: per-list
// F1 on original vs transformed windows and W/B/G category confusion
// matrices.
namespace raekit::eval {

using data::Category;
using data::InferencePartition;
using data::Window;

// Dense softmax classifier over all class ids seen at training time.
struct Classifier {
  nn::Network network;  // float32-precision weights
  std::vector<int> class_ids;  // output column -> class id, ascending
  Eigen::Index channels = 0;
  Eigen::Index window_len = 0;
};

struct ClassifierTrainOptions {
  int epochs = 30;
  int batch_size = 128;
  std::uint64_t seed = 0;
  nn::OptimizerConfig optimizer{};
};

// Two selu hidden layers (inp/4 and inp/16) under a softmax head, trained
// with categorical cross-entropy on original windows only.
Classifier train_classifier(const std::vector<Window>& windows,
                            const ClassifierTrainOptions& options);

std::vector<int> predict(const Classifier& clf, const std::vector<Window>& windows);

// Per-class F1 = 2PR/(P+R) (0 when P+R = 0), macro-averaged over the
// classes of each list. Each list is scored on the sections whose true
// label belongs to it, so a replaced black section recognized as gray
// counts against the black list, not against gray precision. Classes absent
// from both truths and predictions are excluded from the average.
struct ListScores {
  double white = 0.0;
  double black = 0.0;
  double gray = 0.0;

  double for_category(Category c) const {
    switch (c) {
      case Category::White: return white;
      case Category::Black: return black;
      case Category::Gray: return gray;
    }
    return 0.0;
  }
};

ListScores f1_per_list(const std::vector<int>& predictions,
                       const std::vector<int>& truths,
                       const InferencePartition& partition);

// Counts indexed by (true category, predicted category), W/B/G order.
using ConfusionMatrix = std::array<std::array<std::int64_t, 3>, 3>;

ConfusionMatrix category_confusion(const std::vector<int>& predictions,
                                   const std::vector<int>& truths,
                                   const InferencePartition& partition);

struct EvalReport {
  ListScores original_f1;     // OF1
  ListScores transformed_f1;  // TF1
  ConfusionMatrix original_confusion{};
  ConfusionMatrix transformed_confusion{};
};

// Runs the classifier on the test windows as-is and on their RAE transforms.
EvalReport evaluate_pipeline(const Classifier& clf, const rae::TrainedRae& model,
                             const std::vector<Window>& test_windows);

// One row per list x condition.
void write_f1_csv(const EvalReport& report, const std::filesystem::path& path);
void write_confusion_csv(const ConfusionMatrix& matrix, const std::filesystem::path& path);
std::string render_report_text(const EvalReport& report);

void save_classifier(const Classifier& clf, const std::filesystem::path& path);
Classifier load_classifier(const std::filesystem::path& path);

}  // namespace raekit::eval
