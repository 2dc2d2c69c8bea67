#include "raekit/containers.hpp"

#include <array>
#include <bit>
#include <fstream>

namespace raekit::io {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int bit = 0; bit < 8; ++bit) {
      c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
    }
    table[i] = c;
  }
  return table;
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_i32(std::string& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

void put_f32(std::string& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

// Bounds-checked little-endian reader over a loaded file image.
struct ByteReader {
  std::string_view data;
  std::size_t pos = 0;

  std::string_view take(std::size_t n, const char* what) {
    if (pos + n > data.size()) {
      throw ParseError(std::string("container truncated while reading ") + what);
    }
    std::string_view out = data.substr(pos, n);
    pos += n;
    return out;
  }

  std::uint32_t u32(const char* what) {
    const auto bytes = take(4, what);
    return static_cast<std::uint8_t>(bytes[0]) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[3])) << 24);
  }

  std::int32_t i32(const char* what) { return static_cast<std::int32_t>(u32(what)); }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string contents((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  return contents;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// Everything between the version field and the trailing CRC.
std::string build_container(std::string_view magic, const nlohmann::json& metadata,
                            const std::string& payload) {
  std::string bytes(magic);
  put_u32(bytes, kContainerVersion);
  const std::string meta = metadata.dump();
  std::string checked;
  put_u32(checked, static_cast<std::uint32_t>(meta.size()));
  checked += meta;
  checked += payload;
  bytes += checked;
  put_u32(bytes, crc32(checked));
  return bytes;
}

// Validates magic, version and CRC; returns (metadata, payload reader).
std::pair<nlohmann::json, std::string> open_container(std::string_view magic,
                                                      const std::string& bytes,
                                                      const std::string& path) {
  if (bytes.size() < magic.size() + 8 ||
      std::string_view(bytes).substr(0, magic.size()) != magic) {
    throw ParseError(path + ": bad magic bytes (expected " + std::string(magic) + ")");
  }
  ByteReader reader{bytes, magic.size()};
  const std::uint32_t version = reader.u32("version");
  if (version > kContainerVersion) {
    throw ParseError(path + ": file format version " + std::to_string(version) +
                     " is newer than supported version " +
                     std::to_string(kContainerVersion));
  }
  if (bytes.size() < reader.pos + 4) throw ParseError(path + ": truncated container");
  const std::string_view checked(bytes.data() + reader.pos,
                                 bytes.size() - reader.pos - 4);
  ByteReader crc_reader{bytes, bytes.size() - 4};
  const std::uint32_t stored = crc_reader.u32("crc32");
  if (crc32(checked) != stored) throw ParseError(path + ": checksum mismatch");

  const std::uint32_t meta_len = reader.u32("metadata length");
  if (4 + static_cast<std::size_t>(meta_len) > checked.size()) {
    throw ParseError(path + ": metadata length exceeds container size");
  }
  const std::string_view meta = reader.take(meta_len, "metadata");
  nlohmann::json metadata;
  try {
    metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": bad metadata JSON: " + e.what());
  }
  return {std::move(metadata),
          std::string(bytes.substr(reader.pos, checked.size() - 4 - meta_len))};
}

}  // namespace

std::uint32_t crc32(std::string_view bytes) {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (char ch : bytes) {
    c = table[(c ^ static_cast<std::uint8_t>(ch)) & 0xFF] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

nn::Network quantize_to_f32(nn::Network net) {
  for (auto& layer : net.layers) {
    layer.weights = layer.weights.unaryExpr(
        [](double v) { return static_cast<double>(static_cast<float>(v)); });
    layer.bias = layer.bias.unaryExpr(
        [](double v) { return static_cast<double>(static_cast<float>(v)); });
  }
  return net;
}

void save_network_container(const std::filesystem::path& path,
                            const nlohmann::json& metadata,
                            const nn::Network& network) {
  nn::validate(network);
  nlohmann::json meta = metadata;
  meta["layers"] = nlohmann::json::array();
  for (const auto& layer : network.layers) {
    meta["layers"].push_back({{"in", layer.in_dim()},
                              {"out", layer.out_dim()},
                              {"activation", nn::to_string(layer.activation)}});
  }
  std::string payload;
  for (const auto& layer : network.layers) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        put_f32(payload, static_cast<float>(layer.weights(r, c)));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      put_f32(payload, static_cast<float>(layer.bias(r)));
    }
  }
  write_file(path, build_container(kModelMagic, meta, payload));
}

NetworkContainer load_network_container(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  auto [metadata, payload] = open_container(kModelMagic, bytes, path.string());

  if (!metadata.contains("layers") || !metadata["layers"].is_array() ||
      metadata["layers"].empty()) {
    throw ParseError(path.string() + ": metadata lacks layer descriptions");
  }
  NetworkContainer container;
  container.metadata = metadata;
  ByteReader reader{payload, 0};
  for (const auto& layer_meta : metadata["layers"]) {
    nn::DenseLayer layer;
    const auto in = layer_meta.at("in").get<Eigen::Index>();
    const auto out = layer_meta.at("out").get<Eigen::Index>();
    if (in <= 0 || out <= 0) throw ParseError(path.string() + ": bad layer shape");
    layer.activation =
        nn::activation_from_string(layer_meta.at("activation").get<std::string>());
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weights(r, c) = reader.f32("weights");
      }
    }
    layer.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = reader.f32("bias");
    container.network.layers.push_back(std::move(layer));
  }
  if (reader.pos != payload.size()) {
    throw ParseError(path.string() + ": trailing bytes after weight payload");
  }
  nn::validate(container.network);
  return container;
}

void save_windows(const std::filesystem::path& path, const WindowArchive& archive) {
  nlohmann::json meta{{"k", archive.channels},
                      {"d", archive.window_len},
                      {"count", archive.windows.size()},
                      {"norm_stats", to_json(archive.stats)}};
  std::string payload;
  payload.reserve(archive.windows.size() *
                  static_cast<std::size_t>(archive.channels * archive.window_len + 1) * 4);
  for (const auto& window : archive.windows) {
    if (window.values.rows() != archive.channels ||
        window.values.cols() != archive.window_len) {
      throw ShapeError("save_windows: window shape does not match archive header");
    }
    for (Eigen::Index c = 0; c < archive.channels; ++c) {
      for (Eigen::Index t = 0; t < archive.window_len; ++t) {
        put_f32(payload, static_cast<float>(window.values(c, t)));
      }
    }
  }
  for (const auto& window : archive.windows) put_i32(payload, window.label);
  write_file(path, build_container(kWindowsMagic, meta, payload));
}

WindowArchive load_windows(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  auto [metadata, payload] = open_container(kWindowsMagic, bytes, path.string());

  WindowArchive archive;
  archive.channels = metadata.at("k").get<Eigen::Index>();
  archive.window_len = metadata.at("d").get<Eigen::Index>();
  archive.stats = norm_stats_from_json(metadata.at("norm_stats"));
  const auto count = metadata.at("count").get<std::size_t>();

  ByteReader reader{payload, 0};
  archive.windows.resize(count);
  for (auto& window : archive.windows) {
    window.values.resize(archive.channels, archive.window_len);
    for (Eigen::Index c = 0; c < archive.channels; ++c) {
      for (Eigen::Index t = 0; t < archive.window_len; ++t) {
        window.values(c, t) = reader.f32("window values");
      }
    }
  }
  for (auto& window : archive.windows) window.label = reader.i32("labels");
  if (reader.pos != payload.size()) {
    throw ParseError(path.string() + ": trailing bytes after window payload");
  }
  return archive;
}

nlohmann::json to_json(const data::NormStats& stats) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(stats.mean.data(), stats.mean.data() + stats.mean.size());
  j["stddev"] =
      std::vector<double>(stats.stddev.data(), stats.stddev.data() + stats.stddev.size());
  j["zero_variance"] = stats.zero_variance;
  return j;
}

data::NormStats norm_stats_from_json(const nlohmann::json& j) {
  data::NormStats stats;
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto stddev = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != stddev.size()) throw ParseError("norm_stats: mean/stddev size mismatch");
  stats.mean = Eigen::Map<const data::Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  stats.stddev =
      Eigen::Map<const data::Vector>(stddev.data(), static_cast<Eigen::Index>(stddev.size()));
  stats.zero_variance = j.value("zero_variance", std::vector<bool>(mean.size(), false));
  for (Eigen::Index c = 0; c < stats.stddev.size(); ++c) {
    if (!(stats.stddev(c) > 0.0)) throw ParseError("norm_stats: non-positive stddev");
  }
  return stats;
}

nlohmann::json to_json(const data::InferencePartition& partition) {
  return nlohmann::json{{"white", partition.white},
                        {"black", partition.black},
                        {"gray", partition.gray}};
}

data::InferencePartition partition_from_json(const nlohmann::json& j) {
  data::InferencePartition partition;
  for (int label : j.at("white").get<std::vector<int>>()) partition.white.insert(label);
  for (int label : j.at("black").get<std::vector<int>>()) partition.black.insert(label);
  for (int label : j.at("gray").get<std::vector<int>>()) partition.gray.insert(label);
  partition.validate();
  return partition;
}

}  // namespace raekit::io
