#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "raekit/dataio.hpp"
#include "raekit/nn.hpp"

// Versioned binary containers: `RAEMODEL` for networks and `RAEWINDS` for
// prepared window sets. Both carry a UTF-8 JSON metadata block followed by
// little-endian float32 payload data and a trailing CRC32 of everything
// after the version field.
namespace raekit::io {

std::uint32_t crc32(std::string_view bytes);

inline constexpr std::uint32_t kContainerVersion = 1;
inline constexpr std::string_view kModelMagic = "RAEMODEL";
inline constexpr std::string_view kWindowsMagic = "RAEWINDS";

// Weights snapped to float32 and back, so that a freshly trained model and
// its serialized form behave identically.
nn::Network quantize_to_f32(nn::Network net);

struct NetworkContainer {
  nlohmann::json metadata;
  nn::Network network;
};

// Layer shapes and activations are recorded in metadata["layers"]; weights
// and biases follow as float32 in declared order.
void save_network_container(const std::filesystem::path& path,
                            const nlohmann::json& metadata,
                            const nn::Network& network);
NetworkContainer load_network_container(const std::filesystem::path& path);

struct WindowArchive {
  Eigen::Index channels = 0;
  Eigen::Index window_len = 0;
  data::NormStats stats;  // the normalizer the windows were prepared with
  std::vector<data::Window> windows;
};

void save_windows(const std::filesystem::path& path, const WindowArchive& archive);
WindowArchive load_windows(const std::filesystem::path& path);

// JSON <-> domain helpers shared by the containers and the CLI config.
nlohmann::json to_json(const data::NormStats& stats);
data::NormStats norm_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const data::InferencePartition& partition);
data::InferencePartition partition_from_json(const nlohmann::json& j);

}  // namespace raekit::io
