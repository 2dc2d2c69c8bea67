#include "raekit/rae.hpp"

#include <string>
#include <utility>

namespace raekit::rae {

Profile profile_from_string(const std::string& name) {
  if (name == "deep") return Profile::Deep;
  if (name == "shallow") return Profile::Shallow;
  throw ConfigError("unknown RAE profile: " + name);
}

const char* to_string(Profile profile) {
  return profile == Profile::Deep ? "deep" : "shallow";
}

RaeTopology build_rae_topology(Eigen::Index channels, Eigen::Index window_len,
                               Profile profile) {
  if (channels < 1 || window_len < 1) {
    throw ConfigError("build_rae_topology: k and d must be >= 1");
  }
  RaeTopology topology;
  topology.channels = channels;
  topology.window_len = window_len;
  topology.profile = profile;
  const Eigen::Index inp = topology.input_dim();
  const std::vector<Eigen::Index> divisors =
      profile == Profile::Deep ? std::vector<Eigen::Index>{2, 8, 16, 8, 2}
                               : std::vector<Eigen::Index>{2, 3, 4, 3, 2};
  for (Eigen::Index div : divisors) {
    const Eigen::Index size = inp / div;
    if (size < 1) {
      throw ConfigError("build_rae_topology: input dim " + std::to_string(inp) +
                        " / " + std::to_string(div) + " floors to 0");
    }
    topology.hidden_sizes.push_back(size);
  }
  return topology;
}

std::vector<ReplacementPair> build_replacement_pairs(
    const std::vector<Window>& white, const std::vector<Window>& black,
    const std::vector<Window>& gray, std::uint64_t seed) {
  if (!black.empty() && gray.empty()) {
    throw ConfigError(
        "build_replacement_pairs: black windows present but gray set is empty");
  }
  std::vector<ReplacementPair> pairs;
  pairs.reserve(white.size() + gray.size() + black.size());
  for (const auto& w : white) pairs.push_back({w, w});
  for (const auto& g : gray) pairs.push_back({g, g});
  Rng rng(seed);
  for (const auto& b : black) {
    const auto pick = static_cast<std::size_t>(rng.integer(gray.size()));
    pairs.push_back({b, gray[pick]});
  }
  return pairs;
}

Eigen::RowVectorXd flatten_window(const Window& window) {
  const Eigen::Index k = window.values.rows();
  const Eigen::Index d = window.values.cols();
  Eigen::RowVectorXd flat(k * d);
  for (Eigen::Index c = 0; c < k; ++c) {
    flat.segment(c * d, d) = window.values.row(c);
  }
  return flat;
}

Window unflatten_window(const Eigen::RowVectorXd& flat, Eigen::Index channels,
                        Eigen::Index window_len, int label) {
  if (flat.size() != channels * window_len) {
    throw ShapeError("unflatten_window: length does not equal k*d");
  }
  Window window;
  window.label = label;
  window.values.resize(channels, window_len);
  for (Eigen::Index c = 0; c < channels; ++c) {
    window.values.row(c) = flat.segment(c * window_len, window_len);
  }
  return window;
}

namespace {

nn::Matrix stack_windows(const std::vector<ReplacementPair>& pairs, bool targets,
                         const RaeTopology& topology) {
  nn::Matrix out(static_cast<Eigen::Index>(pairs.size()), topology.input_dim());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Window& w = targets ? pairs[i].target : pairs[i].input;
    if (w.values.rows() != topology.channels ||
        w.values.cols() != topology.window_len) {
      throw ShapeError("train_rae: pair window shape does not match topology");
    }
    out.row(static_cast<Eigen::Index>(i)) = flatten_window(w);
  }
  return out;
}

}  // namespace

RaeTrainResult train_rae(const std::vector<ReplacementPair>& pairs,
                         const RaeTopology& topology,
                         const data::NormStats& stats,
                         const data::InferencePartition& partition,
                         const RaeTrainOptions& options) {
  if (pairs.empty()) throw DataError("train_rae: no training pairs");

  const nn::Matrix inputs = stack_windows(pairs, false, topology);
  const nn::Matrix targets = stack_windows(pairs, true, topology);

  std::vector<Eigen::Index> dims;
  dims.push_back(topology.input_dim());
  for (Eigen::Index h : topology.hidden_sizes) dims.push_back(h);
  dims.push_back(topology.input_dim());
  std::vector<nn::Activation> activations(topology.hidden_sizes.size(),
                                          nn::Activation::Selu);
  activations.push_back(nn::Activation::Linear);

  Rng seed_source(options.seed);
  Rng init_rng = seed_source.fork(1);
  nn::Network net = nn::make_network(dims, activations, init_rng);

  nn::FitOptions fit_options;
  fit_options.loss = nn::Loss::Mse;
  fit_options.epochs = options.epochs;
  fit_options.batch_size = options.batch_size;
  fit_options.seed = seed_source.fork(2).seed();
  fit_options.optimizer = options.optimizer;
  std::vector<double> losses = nn::fit(net, inputs, targets, fit_options);

  RaeTrainResult result;
  result.model.network = io::quantize_to_f32(std::move(net));
  result.model.norm_stats = stats;
  result.model.partition = partition;
  result.model.topology = topology;
  result.epoch_loss = std::move(losses);
  return result;
}

Window transform_window(const TrainedRae& model, const Window& window) {
  if (window.values.rows() != model.topology.channels ||
      window.values.cols() != model.topology.window_len) {
    throw ShapeError("transform_window: window shape does not match model");
  }
  const Eigen::RowVectorXd flat = flatten_window(window);
  const nn::Matrix out = nn::forward(model.network, flat);
  return unflatten_window(out.row(0), model.topology.channels,
                          model.topology.window_len, window.label);
}

nn::Matrix transform_rows(const TrainedRae& model, const nn::Matrix& rows) {
  return nn::forward(model.network, rows);
}

Window transform_raw_window(const TrainedRae& model, const Window& window) {
  Window normalized = data::apply_normalizer(window, model.norm_stats);
  Window transformed = transform_window(model, normalized);
  Window raw;
  raw.label = window.label;
  raw.values = (transformed.values.array().colwise() *
                model.norm_stats.stddev.array())
                   .colwise() +
               model.norm_stats.mean.array();
  return raw;
}

void save_model(const TrainedRae& model, const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["model_kind"] = "rae";
  meta["k"] = model.topology.channels;
  meta["d"] = model.topology.window_len;
  meta["profile"] = to_string(model.topology.profile);
  meta["hidden_sizes"] = model.topology.hidden_sizes;
  meta["partition"] = io::to_json(model.partition);
  meta["norm_stats"] = io::to_json(model.norm_stats);
  io::save_network_container(path, meta, model.network);
}

TrainedRae load_model(const std::filesystem::path& path) {
  io::NetworkContainer container = io::load_network_container(path);
  const auto& meta = container.metadata;
  if (meta.value("model_kind", "") != "rae") {
    throw ParseError(path.string() + ": not a RAE model (model_kind=" +
                     meta.value("model_kind", "<missing>") + ")");
  }
  TrainedRae model;
  model.network = std::move(container.network);
  model.topology.channels = meta.at("k").get<Eigen::Index>();
  model.topology.window_len = meta.at("d").get<Eigen::Index>();
  model.topology.profile = profile_from_string(meta.at("profile").get<std::string>());
  model.topology.hidden_sizes = meta.at("hidden_sizes").get<std::vector<Eigen::Index>>();
  model.partition = io::partition_from_json(meta.at("partition"));
  model.norm_stats = io::norm_stats_from_json(meta.at("norm_stats"));
  if (model.network.input_dim() != model.topology.input_dim() ||
      model.network.output_dim() != model.topology.input_dim()) {
    throw ParseError(path.string() + ": network dims disagree with k*d metadata");
  }
  return model;
}

}  // namespace raekit::rae
