#include <gtest/gtest.h>

#include <bit>
#include <cstring>

#include "cosmig/checkpoint.hpp"
#include "cosmig/error.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace cosmig {
namespace {

Checkpoint sample_checkpoint() {
  Checkpoint cp;
  cp.model.embed_dim = 5;
  cp.model.depth = 3;
  cp.model.num_relations = 3;
  cp.model.pooling = Pooling::kAvg;
  cp.model.per_layer_relations = true;
  cp.extraction.method = ExtractionMethod::kEnclosing;
  cp.extraction.rwr.restart_continuation = 0.65;
  cp.extraction.rwr.max_nodes_per_seed = 17;
  cp.vocab = RelationVocab({"agonist", "antagonist", "inhibitor"});
  Rng rng(8);
  cp.params = init_params(cp.model, rng);
  return cp;
}

std::string error_of(const std::string& bytes) {
  try {
    decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.what();
  }
  return "";
}

TEST(Checkpoint, RoundTripIsExactAfterRounding) {
  Checkpoint cp = sample_checkpoint();
  round_to_stored_precision(cp.params);
  testing::TempDir dir("ckpt");
  save_checkpoint(cp, dir.file("a.csmg"));
  const Checkpoint back = load_checkpoint(dir.file("a.csmg"));
  EXPECT_TRUE(back.params == cp.params);
  EXPECT_EQ(back.model, cp.model);
  EXPECT_EQ(back.vocab, cp.vocab);
  EXPECT_EQ(back.extraction.method, cp.extraction.method);
  EXPECT_EQ(back.extraction.rwr.restart_continuation, 0.65);
  EXPECT_EQ(back.extraction.rwr.max_nodes_per_seed, 17u);

  save_checkpoint(back, dir.file("b.csmg"));
  EXPECT_EQ(testing::read_file(dir.file("a.csmg")), testing::read_file(dir.file("b.csmg")));
}

TEST(Checkpoint, LayoutIsLittleEndianFloat32) {
  const Checkpoint cp = sample_checkpoint();
  const std::string bytes = encode_checkpoint(cp);
  ASSERT_EQ(bytes.substr(0, 4), "CSMG");
  auto u32 = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[at + i]);
    return v;
  };
  EXPECT_EQ(u32(4), kCheckpointVersion);
  const std::uint64_t manifest_size = u32(8) | (static_cast<std::uint64_t>(u32(12)) << 32);
  const auto manifest = nlohmann::json::parse(bytes.substr(16, manifest_size));
  const auto& first = manifest["tensors"][0];
  const std::string name = first["name"];
  const std::size_t payload = 16 + manifest_size + first["offset"].get<std::size_t>();
  const float stored = std::bit_cast<float>(u32(payload));
  EXPECT_EQ(stored, static_cast<float>(cp.params.get(name).values()[0]));
  EXPECT_EQ(bytes.size(), 16 + manifest_size + manifest["payload_bytes"].get<std::size_t>());
}

TEST(Checkpoint, DefectsAreNamed) {
  const std::string bytes = encode_checkpoint(sample_checkpoint());
  EXPECT_NE(error_of("XXXX" + bytes.substr(4)).find("bad magic"), std::string::npos);

  std::string newer = bytes;
  newer[4] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_NE(error_of(newer).find("unsupported checkpoint version"), std::string::npos);

  EXPECT_NE(error_of(bytes.substr(0, 40)).find("truncated manifest"), std::string::npos);

  const auto manifest_size = static_cast<std::size_t>(static_cast<unsigned char>(bytes[8])) |
                             static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8;
  const auto manifest = nlohmann::json::parse(bytes.substr(16, manifest_size));
  const std::string last = manifest["tensors"].back()["name"];
  EXPECT_EQ(error_of(bytes.substr(0, bytes.size() - 2)), "truncated tensor payload at " + last);
  EXPECT_NE(error_of(bytes + "zz").find("payload bytes"), std::string::npos);
  EXPECT_THROW(load_checkpoint("/nonexistent/model.csmg"), CheckpointError);
}

TEST(Checkpoint, CompatibilityWithData) {
  const Checkpoint cp = sample_checkpoint();
  const std::vector<Interaction> three{{"a", "x", 1}, {"a", "y", 2}, {"b", "x", 3}};
  const auto g3 = InteractionGraph::from_interactions(three, 3);
  EXPECT_NO_THROW(check_compatible(cp, g3, cp.vocab));
  const auto g2 = InteractionGraph::from_interactions(std::vector<Interaction>{{"a", "x", 1}}, 2);
  EXPECT_THROW(check_compatible(cp, g2, RelationVocab({"agonist", "antagonist"})), CheckpointError);
  EXPECT_THROW(check_compatible(cp, g3, RelationVocab({"p", "q", "r"})), CheckpointError);
  Checkpoint other_hop = sample_checkpoint();
  other_hop.extraction.rwr.hop_limit = 5;
  EXPECT_THROW(check_compatible(other_hop, g3, cp.vocab), CheckpointError);
}

TEST(Checkpoint, SaveIsAtomicReplace) {
  testing::TempDir dir("ckpt_atomic");
  const std::string path = dir.file("m.csmg");
  testing::write_file(path, "old contents");
  Checkpoint cp = sample_checkpoint();
  save_checkpoint(cp, path);
  EXPECT_NO_THROW(load_checkpoint(path));
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir.path())) {
    (void)entry;
    ++files;
  }
  EXPECT_EQ(files, 1u);  // no temp file left behind
}

}  // namespace
}  // namespace cosmig
