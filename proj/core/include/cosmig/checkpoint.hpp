#pragma once

#include <cstdint>
#include <string>

#include "cosmig/graph.hpp"
#include "cosmig/model.hpp"
#include "cosmig/param_store.hpp"
#include "cosmig/subgraph.hpp"

namespace cosmig {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// A trained model with everything needed to use it again.
struct Checkpoint {
  ModelConfig model;
  ExtractionConfig extraction;
  RelationVocab vocab;
  ParamStore params;
};

// File layout: "CSMG", u32 version, u64 manifest length, JSON manifest
// (configs, relation names, tensor directory with name, shape and byte
// offset), then every tensor as little-endian float32, row-major, in
// directory order. All integers are little-endian.
std::string encode_checkpoint(const Checkpoint& checkpoint);
// Throws CheckpointError naming the defect (bad magic, unsupported version,
// truncated manifest, truncated tensor payload at <name>, ...).
Checkpoint decode_checkpoint(const std::string& bytes);

// Written to a temporary file in the same directory, then renamed.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rounds every parameter to the nearest float32, the precision checkpoints
// keep, so in-memory and reloaded models score identically.
void round_to_stored_precision(ParamStore& params);

// Throws CheckpointError when the checkpoint's relation vocabulary or label
// count does not fit `graph` / `vocab`.
void check_compatible(const Checkpoint& checkpoint, const InteractionGraph& graph,
                      const RelationVocab& vocab);

}  // namespace cosmig
