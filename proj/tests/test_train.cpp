#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "unet/train.hpp"

namespace unet {
namespace {

TrainConfig thin_config() {
  TrainConfig c;
  c.net = UNetConfig{2, 4, 1, 2, 0.5};
  c.tile_size = valid_input_sizes(92, 120, 2).front();
  c.learning_rate = 1e-6;
  c.iterations = 20;
  c.seed = 3;
  c.deterministic = true;
  c.augmentation.displacement_sigma = 4.0;
  return c;
}

TEST(Train, ZeroLearningRateLeavesParametersUntouched) {
  TrainConfig c = thin_config();
  c.learning_rate = 0.0;
  c.iterations = 5;
  const auto result = train(c, synthetic_blobs(64, 1));
  Rng init(c.seed);
  const auto fresh = UNet<float>::build(c.net, init);
  for (std::size_t i = 0; i < fresh.params().size(); ++i) {
    EXPECT_EQ(result.net.params()[i].weights, fresh.params()[i].weights);
    EXPECT_EQ(result.net.params()[i].bias, fresh.params()[i].bias);
  }
  ASSERT_EQ(result.log.size(), 5u);
  for (const auto& e : result.log) EXPECT_GT(e.loss, 0.0);
}

TEST(Train, SeededRunsAreIdentical) {
  const TrainConfig c = thin_config();
  const auto samples = synthetic_blobs(64, 1);
  const auto a = train(c, samples), b = train(c, samples);
  EXPECT_EQ(a.log, b.log);
  for (std::size_t i = 0; i < a.net.params().size(); ++i) {
    EXPECT_EQ(a.net.params()[i].weights, b.net.params()[i].weights);
  }
  TrainConfig other = c;
  other.seed = 4;
  EXPECT_NE(train(other, samples).log, a.log);
}

TEST(Train, LossFallsOnSyntheticBlobs) {
  TrainConfig c = thin_config();
  c.iterations = 200;
  c.augment = false;
  c.net.dropout_rate = 0.0;
  const auto log = train(c, synthetic_blobs(64, 1)).log;
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0;
    for (std::size_t i = from; i < to; ++i) s += log[i].loss;
    return s / double(to - from);
  };
  EXPECT_LT(mean(190, 200), 0.5 * mean(0, 10));
}

TEST(Train, CheckpointCallbackCadence) {
  TrainConfig c = thin_config();
  c.iterations = 7;
  c.checkpoint_every = 3;
  std::vector<std::size_t> seen;
  train(c, synthetic_blobs(64, 1), [&](std::size_t it, const UNet<float>&) { seen.push_back(it); });
  EXPECT_EQ(seen, (std::vector<std::size_t>{3, 6}));
}

TEST(Train, DivergenceReportsIteration) {
  TrainConfig c = thin_config();
  c.learning_rate = 1e4;
  c.iterations = 50;
  try {
    train(c, synthetic_blobs(64, 1));
    FAIL() << "expected divergence";
  } catch (const TrainingDiverged& e) {
    EXPECT_LT(e.iteration(), 50u);
    EXPECT_NE(std::string(e.what()).find("iteration " + std::to_string(e.iteration())), std::string::npos);
  }
}

TEST(Train, Preconditions) {
  const auto samples = synthetic_blobs(64, 1);
  TrainConfig c = thin_config();
  c.tile_size = c.tile_size + 1;
  EXPECT_THROW(train(c, samples), PreconditionError);
  c = thin_config();
  c.momentum = 1.0;
  EXPECT_THROW(train(c, samples), PreconditionError);
  c = thin_config();
  c.learning_rate = -1;
  EXPECT_THROW(train(c, samples), PreconditionError);
  EXPECT_THROW(train(thin_config(), {}), PreconditionError);
  EXPECT_THROW(train(thin_config(), synthetic_blobs(20, 1)), PreconditionError);
  std::vector<TrainSample> mismatched = {{Image(64, 64), InstanceMap(64, 63)}};
  EXPECT_THROW(train(thin_config(), mismatched), PreconditionError);
}

TEST(Train, ConfigFromKeyValues) {
  TrainConfig c;
  c.apply(KeyValueConfig::parse("depth=3\nbase_channels=8\nlearning_rate=3e-6\naugment=false\nw0=5\n"));
  EXPECT_EQ(c.net.depth, 3u);
  EXPECT_EQ(c.net.base_channels, 8u);
  EXPECT_EQ(c.learning_rate, 3e-6);
  EXPECT_FALSE(c.augment);
  EXPECT_EQ(c.weights.w0, 5.0);
  EXPECT_EQ(c.momentum, 0.99);
}

TEST(LossLog, TabSeparatedLines) {
  std::ostringstream os;
  write_loss_log(os, {{0, 1.5, 0}, {1, 0.25, 2}});
  EXPECT_EQ(os.str(), "0\t1.5\t0\n1\t0.25\t2\n");
}

TEST(SyntheticBlobs, SeparatedInstances) {
  const auto samples = synthetic_blobs(64, 2);
  ASSERT_EQ(samples.size(), 2u);
  for (const auto& s : samples) {
    std::uint32_t max_id = 0;
    for (auto v : s.instances.data) max_id = std::max(max_id, v);
    EXPECT_GE(max_id, 3u);
    // No two distinct instances touch under 4-connectivity.
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x + 1 < 64; ++x) {
        const auto a = s.instances(y, x), b = s.instances(y, x + 1);
        EXPECT_TRUE(a == 0 || b == 0 || a == b);
      }
  }
}

}  // namespace
}  // namespace unet
