#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "raekit/containers.hpp"
#include "raekit/dataio.hpp"
#include "raekit/nn.hpp"

// The Replacement AutoEncoder: an autoencoder trained so white- and
// gray-listed windows reconstruct as themselves while black-listed windows
// come back looking like gray-listed data.
namespace raekit::rae {

using data::Window;

enum class Profile { Deep, Shallow };

Profile profile_from_string(const std::string& name);
const char* to_string(Profile profile);

// Five symmetric hidden layers around a k*d-wide linear boundary. Deep
// profile divides the input width by 2/8/16/8/2, shallow by 2/3/4/3/2
// (for low-dimensional data). All sizes floor-divided; a zero size is an
// error.
struct RaeTopology {
  Eigen::Index channels = 0;    // k
  Eigen::Index window_len = 0;  // d
  Profile profile = Profile::Deep;
  std::vector<Eigen::Index> hidden_sizes;

  Eigen::Index input_dim() const { return channels * window_len; }
};

RaeTopology build_rae_topology(Eigen::Index channels, Eigen::Index window_len,
                               Profile profile);

// Training example: white and gray windows target themselves, each black
// window targets an independently drawn gray window.
struct ReplacementPair {
  Window input;
  Window target;
};

// Uniform-with-replacement draw of one gray target per black window, fixed
// before training. Gray must be non-empty whenever black is not.
std::vector<ReplacementPair> build_replacement_pairs(
    const std::vector<Window>& white, const std::vector<Window>& black,
    const std::vector<Window>& gray, std::uint64_t seed);

struct TrainedRae {
  nn::Network network;  // weights at float32 precision
  data::NormStats norm_stats;
  data::InferencePartition partition;
  RaeTopology topology;
};

struct RaeTrainOptions {
  int epochs = 30;
  int batch_size = 128;
  std::uint64_t seed = 0;
  nn::OptimizerConfig optimizer{};
};

struct RaeTrainResult {
  TrainedRae model;
  std::vector<double> epoch_loss;
};

// Minimizes mean squared replacement error over the fixed pairs. Windows
// are expected to be normalized with `stats` already.
RaeTrainResult train_rae(const std::vector<ReplacementPair>& pairs,
                         const RaeTopology& topology,
                         const data::NormStats& stats,
                         const data::InferencePartition& partition,
                         const RaeTrainOptions& options);

// Flattening convention used everywhere a window meets a vector: row-major,
// channels first (index = channel * d + t).
Eigen::RowVectorXd flatten_window(const Window& window);
Window unflatten_window(const Eigen::RowVectorXd& flat, Eigen::Index channels,
                        Eigen::Index window_len, int label);

// Normalized window in, normalized window out; the label passes through.
Window transform_window(const TrainedRae& model, const Window& window);

// Batch variant over pre-flattened rows.
nn::Matrix transform_rows(const TrainedRae& model, const nn::Matrix& rows);

// Raw sensor units in, raw sensor units out: applies the stored normalizer,
// transforms, and inverts the normalizer. This is the mediator's code path.
Window transform_raw_window(const TrainedRae& model, const Window& window);

void save_model(const TrainedRae& model, const std::filesystem::path& path);
TrainedRae load_model(const std::filesystem::path& path);

}  // namespace raekit::rae
