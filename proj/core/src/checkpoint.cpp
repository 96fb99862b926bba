#include "cosmig/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "cosmig/error.hpp"
#include "json.hpp"

namespace cosmig {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'C', 'S', 'M', 'G'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t at) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return value;
}

json model_json(const ModelConfig& m) {
  return {{"embed_dim", m.embed_dim},
          {"depth", m.depth},
          {"num_relations", m.num_relations},
          {"num_labels", m.num_labels},
          {"pooling", to_string(m.pooling)},
          {"hidden_activation", to_string(m.hidden_activation)},
          {"gate_activation", to_string(m.gate_activation)},
          {"leaky_slope", m.leaky_slope},
          {"edge_dropout", m.edge_dropout},
          {"attention_dim", m.attention_dim},
          {"head_dim", m.head_dim},
          {"per_layer_relations", m.per_layer_relations}};
}

ModelConfig model_from_json(const json& j) {
  ModelConfig m;
  m.embed_dim = j.at("embed_dim").get<std::size_t>();
  m.depth = j.at("depth").get<std::size_t>();
  m.num_relations = j.at("num_relations").get<std::size_t>();
  m.num_labels = j.at("num_labels").get<std::size_t>();
  m.pooling = parse_pooling(j.at("pooling").get<std::string>());
  m.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
  m.gate_activation = parse_activation(j.at("gate_activation").get<std::string>());
  m.leaky_slope = j.at("leaky_slope").get<double>();
  m.edge_dropout = j.at("edge_dropout").get<double>();
  m.attention_dim = j.at("attention_dim").get<std::size_t>();
  m.head_dim = j.at("head_dim").get<std::size_t>();
  m.per_layer_relations = j.at("per_layer_relations").get<bool>();
  return m;
}

json extraction_json(const ExtractionConfig& e) {
  return {{"method", to_string(e.method)},
          {"restart_continuation", e.rwr.restart_continuation},
          {"hop_limit", e.rwr.hop_limit},
          {"max_nodes_per_seed", e.rwr.max_nodes_per_seed},
          {"tolerance", e.rwr.tolerance},
          {"max_iterations", e.rwr.max_iterations},
          {"tie_tolerance", e.rwr.tie_tolerance}};
}

ExtractionConfig extraction_from_json(const json& j) {
  ExtractionConfig e;
  e.method = parse_extraction_method(j.at("method").get<std::string>());
  e.rwr.restart_continuation = j.at("restart_continuation").get<double>();
  e.rwr.hop_limit = j.at("hop_limit").get<std::uint32_t>();
  e.rwr.max_nodes_per_seed = j.at("max_nodes_per_seed").get<std::size_t>();
  e.rwr.tolerance = j.at("tolerance").get<double>();
  e.rwr.max_iterations = j.at("max_iterations").get<std::size_t>();
  e.rwr.tie_tolerance = j.at("tie_tolerance").get<double>();
  return e;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  json directory = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : checkpoint.params) {
    directory.push_back({{"name", name},
                         {"rows", tensor.rows()},
                         {"cols", tensor.cols()},
                         {"offset", offset}});
    offset += 4 * tensor.size();
  }
  json manifest;
  manifest["model"] = model_json(checkpoint.model);
  manifest["extraction"] = extraction_json(checkpoint.extraction);
  manifest["relations"] = checkpoint.vocab.names();
  manifest["tensors"] = std::move(directory);
  manifest["payload_bytes"] = offset;
  const std::string text = manifest.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& [name, tensor] : checkpoint.params) {
    for (double v : tensor.values()) {
      const auto f = static_cast<float>(v);
      if (!std::isfinite(f)) {
        throw CheckpointError("parameter '" + name + "' does not fit in float32");
      }
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  constexpr std::size_t kHeader = sizeof kMagic + 4 + 8;
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  if (bytes.size() < kHeader) throw CheckpointError("truncated checkpoint header");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto manifest_size = get_le<std::uint64_t>(bytes, 8);
  if (manifest_size > bytes.size() - kHeader) throw CheckpointError("truncated manifest");

  Checkpoint cp;
  std::size_t payload_start = kHeader + manifest_size;
  try {
    const json manifest = json::parse(bytes.substr(kHeader, manifest_size));
    cp.model = model_from_json(manifest.at("model"));
    cp.extraction = extraction_from_json(manifest.at("extraction"));
    cp.vocab = RelationVocab(manifest.at("relations").get<std::vector<std::string>>());
    const auto payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto rows = entry.at("rows").get<std::size_t>();
      const auto cols = entry.at("cols").get<std::size_t>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const std::size_t count = rows * cols;
      if (offset + 4 * count > payload_bytes) {
        throw CheckpointError("tensor directory entry '" + name + "' overruns the payload");
      }
      if (payload_start + offset + 4 * count > bytes.size()) {
        throw CheckpointError("truncated tensor payload at " + name);
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto raw = get_le<std::uint32_t>(bytes, payload_start + offset + 4 * i);
        values[i] = static_cast<double>(std::bit_cast<float>(raw));
      }
      cp.params.add(name, Tensor(rows, cols, std::move(values)));
    }
    if (bytes.size() != payload_start + payload_bytes) {
      throw CheckpointError("checkpoint has " +
                            std::to_string(bytes.size() - payload_start) +
                            " payload bytes, manifest says " + std::to_string(payload_bytes));
    }
    check_params(cp.params, cp.model);
  } catch (const CheckpointError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  } catch (const Error& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string bytes = encode_checkpoint(checkpoint);
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write '" + tmp + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw CheckpointError("failed writing '" + tmp + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw CheckpointError("cannot move checkpoint into place at '" + path + "': " + ec.message());
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

void round_to_stored_precision(ParamStore& params) {
  for (auto& [name, tensor] : params) {
    for (double& v : tensor.mutable_values()) v = static_cast<double>(static_cast<float>(v));
  }
}

void check_compatible(const Checkpoint& checkpoint, const InteractionGraph& graph,
                      const RelationVocab& vocab) {
  if (checkpoint.model.num_relations != graph.num_relations()) {
    throw CheckpointError("checkpoint was trained with " +
                          std::to_string(checkpoint.model.num_relations) +
                          " relations, data has " + std::to_string(graph.num_relations()));
  }
  if (!(checkpoint.vocab == vocab)) {
    throw CheckpointError("checkpoint relation vocabulary differs from the data's");
  }
  const std::size_t labels = 2 * static_cast<std::size_t>(checkpoint.extraction.rwr.hop_limit) + 2;
  if (checkpoint.model.num_labels != labels) {
    throw CheckpointError("checkpoint has " + std::to_string(checkpoint.model.num_labels) +
                          " node labels, hop limit " +
                          std::to_string(checkpoint.extraction.rwr.hop_limit) + " needs " +
                          std::to_string(labels));
  }
}

}  // namespace cosmig
