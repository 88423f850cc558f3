#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "grn/checkpoint.hpp"
#include "grn/error.hpp"
#include "grn/trainer.hpp"
#include "support.hpp"

namespace grn {
namespace {

namespace fs = std::filesystem;

struct TempPath {
  fs::path path;
  explicit TempPath(const std::string& name)
      : path(fs::temp_directory_path() / ("grn_" + std::to_string(::getpid()) + "_" + name)) {}
  ~TempPath() { fs::remove(path); }
  std::string str() const { return path.string(); }
};

std::vector<Paragraph> corpus(std::size_t n) {
  SyntheticConfig sc;
  sc.paragraphs = n;
  return generate_synthetic(sc);
}

TEST(Checkpoint, RoundTripReproducesPredictions) {
  auto data = corpus(10);
  auto model = testing::tiny_model(data, testing::tiny_config(GraphVariant::SE));
  ad::Rng rng(4);
  testing::jitter(model.params(), rng, 0.5);
  TempPath file("roundtrip.ckpt");
  save_checkpoint(file.str(), model, {{"note", "x"}});

  auto info = read_checkpoint_info(file.str());
  EXPECT_EQ(info.precision_bits, 64u);
  EXPECT_EQ(info.metadata.at("note"), "x");
  EXPECT_EQ(info.metadata.at("variant"), "SE");
  EXPECT_EQ(info.vocab.size(), model.vocab().size());

  auto loaded = load_model<double>(file.str());
  EXPECT_EQ(loaded.count_parameters().total, model.count_parameters().total);
  auto a = predict_corpus(model, data, 8, 1);
  auto b = predict_corpus(loaded, data, 8, 1);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].order, b[i].order);
    EXPECT_EQ(a[i].slots.log_prob, b[i].slots.log_prob);
  }
}

TEST(Checkpoint, FloatRoundTrip) {
  auto data = corpus(4);
  auto model = testing::tiny_model<float>(data);
  TempPath file("float.ckpt");
  save_checkpoint(file.str(), model);
  EXPECT_EQ(read_checkpoint_info(file.str()).precision_bits, 32u);
  auto loaded = load_model<float>(file.str());
  for (const auto& [name, t] : model.params()) {
    auto v = loaded.params().get(name).values();
    EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), v.begin())) << name;
  }
  EXPECT_THROW(load_model<double>(file.str()), CheckpointError);
}

TEST(Checkpoint, StepsAreNotParameters) {
  auto data = corpus(3);
  auto cfg = testing::tiny_config(GraphVariant::SE);
  auto model = testing::tiny_model(data, cfg);
  TempPath file("steps.ckpt");
  save_checkpoint(file.str(), model);
  cfg.steps = 5;
  auto other = testing::tiny_model(data, cfg);
  EXPECT_NO_THROW(load_parameters(file.str(), other.params()));
}

TEST(Checkpoint, ShapeMismatchNamesTheParameters) {
  auto data = corpus(3);
  auto cfg = testing::tiny_config(GraphVariant::SE);
  auto model = testing::tiny_model(data, cfg);
  TempPath file("shape.ckpt");
  save_checkpoint(file.str(), model);
  cfg.sentence_dim = 8;
  auto other = testing::tiny_model(data, cfg);
  try {
    load_parameters(file.str(), other.params());
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("grn.sent.Wr"), std::string::npos) << e.what();
  }
  auto s = testing::tiny_model(data, testing::tiny_config(GraphVariant::S));
  EXPECT_THROW(load_parameters(file.str(), s.params()), CheckpointError);
}

TEST(Checkpoint, RejectsForeignFiles) {
  TempPath file("junk.ckpt");
  std::ofstream(file.path) << "not a checkpoint";
  EXPECT_THROW(read_checkpoint_info(file.str()), CheckpointError);
  EXPECT_THROW(read_checkpoint_info("/nonexistent/x.ckpt"), CheckpointError);
  std::ofstream(file.path) << "GRNCKPT1";
  EXPECT_THROW(load_model<double>(file.str()), CheckpointError);
}

TEST(Checkpoint, MetadataRoundTrip) {
  ModelConfig c = testing::tiny_config(GraphVariant::S);
  c.ablation = Ablation::remove_entities(0.5, 11);
  c.freeze_embeddings = true;
  auto back = apply_metadata(model_metadata(c), ModelConfig{});
  EXPECT_EQ(back.variant, c.variant);
  EXPECT_EQ(back.sentence_dim, c.sentence_dim);
  EXPECT_EQ(back.entity_dim, c.entity_dim);
  EXPECT_EQ(back.steps, c.steps);
  EXPECT_EQ(back.freeze_embeddings, true);
  EXPECT_EQ(back.ablation.kind, Ablation::Kind::RemoveEntities);
  EXPECT_EQ(back.ablation.fraction, 0.5);
  EXPECT_EQ(back.ablation.seed, 11u);
  EXPECT_THROW(apply_metadata({}, ModelConfig{}), CheckpointError);
}

}  // namespace
}  // namespace grn
