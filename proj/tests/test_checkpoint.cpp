#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "increlora/checkpoint.hpp"
#include "increlora/errors.hpp"
#include "increlora/gradcheck.hpp"
#include "increlora/trainer.hpp"

using namespace increlora;

namespace {

Checkpoint sample_checkpoint() {
  Rng rng(1);
  const Backbone net = gradcheck::random_network(rng, {3, 4, 2}, Activation::Tanh, LossKind::MeanSquaredError);
  return capture(net, 0xabcdef, 77, Phase::Allocating);
}

}  // namespace

TEST(Checkpoint, EncodeDecodeRoundTrip) {
  const Checkpoint ck = sample_checkpoint();
  const auto bytes = encode(ck);
  EXPECT_EQ(decode(bytes), ck);
  EXPECT_EQ(encode(decode(bytes)), bytes);
}

TEST(Checkpoint, FileRoundTripIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "increlora_ckpt_test";
  std::filesystem::create_directories(dir);
  const Checkpoint ck = sample_checkpoint();
  save_checkpoint(ck, (dir / "a.bin").string());
  save_checkpoint(load_checkpoint((dir / "a.bin").string()), (dir / "b.bin").string());
  std::ifstream a(dir / "a.bin", std::ios::binary);
  std::ifstream b(dir / "b.bin", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, HeaderLayoutIsLittleEndian) {
  const auto bytes = encode(sample_checkpoint());
  ASSERT_GE(bytes.size(), 29u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "IRLC");
  EXPECT_EQ(bytes[4], kCheckpointVersion);
  EXPECT_EQ(bytes[8], 0xef);
  EXPECT_EQ(bytes[9], 0xcd);
  EXPECT_EQ(bytes[10], 0xab);
  EXPECT_EQ(bytes[16], 77);
  EXPECT_EQ(bytes[24], 0);  // phase Allocating
  EXPECT_EQ(bytes[25], 2);  // two modules
}

TEST(Checkpoint, RejectsCorruptInput) {
  auto bytes = encode(sample_checkpoint());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode(bad_magic), Error);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode(bad_version), Error);
  EXPECT_THROW(decode(std::span(bytes).first(bytes.size() - 3)), Error);
  bytes.push_back(0);
  EXPECT_THROW(decode(bytes), Error);
}

TEST(Checkpoint, RestoreReproducesTheForwardPass) {
  Rng rng(2);
  const Backbone net = gradcheck::random_network(rng, {3, 4, 2}, Activation::Relu, LossKind::MeanSquaredError);
  Backbone copy = net;
  Rng other(3);
  for (std::size_t k = 0; k < copy.size(); ++k) {
    copy.adapter(k) = SvdAdapter(copy.adapter(k).in_dim(), copy.adapter(k).out_dim(), other);
  }
  restore_adapters(capture(net, 0, 0, Phase::Allocating), copy);
  const DenseMatrix x = gaussian_fill(rng, 5, 3, 1.0);
  EXPECT_EQ(forward(copy, x).output, forward(net, x).output);
}

TEST(Checkpoint, RestoreRejectsShapeMismatch) {
  Rng rng(4);
  Backbone net = gradcheck::random_network(rng, {3, 4, 2}, Activation::Tanh, LossKind::MeanSquaredError);
  Checkpoint ck = capture(net, 0, 0, Phase::Closed);
  ck.modules[0].in = 5;
  EXPECT_THROW(restore_adapters(ck, net), Error);
}

TEST(Checkpoint, EvaluateRefusesAForeignConfig) {
  const TrainConfig cfg = fixtures::small_config();
  const TrainResult r = train(cfg);
  EXPECT_DOUBLE_EQ(evaluate(r.final_checkpoint, cfg), r.final_eval);
  TrainConfig other = cfg;
  other.seed += 1;
  EXPECT_THROW(evaluate(r.final_checkpoint, other), ConfigError);
}
