#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "unet/augment.hpp"
#include "unet/io.hpp"
#include "unet/unet.hpp"
#include "unet/weightmap.hpp"

namespace unet {

struct TrainConfig {
  UNetConfig net;
  double learning_rate = 0.001;
  double momentum = 0.99;
  std::size_t iterations = 1000;
  std::uint64_t seed = 0;
  /// Network input tile edge; must be a valid input size for `net`.
  std::size_t tile_size = 572;
  bool augment = true;
  AugmentConfig augmentation;
  WeightMapParams weights;
  /// Checkpoint every N iterations through the callback; 0 disables.
  std::size_t checkpoint_every = 0;
  /// Single-threaded kernels for run-to-run reproducibility.
  bool deterministic = false;

  /// Reads recognised keys, keeping current values for absent ones.
  void apply(const KeyValueConfig& kv);
  void validate() const;
};

struct TrainSample {
  Image image;
  InstanceMap instances;
};

struct LogEntry {
  std::size_t iteration = 0;
  double loss = 0.0;
  std::size_t saturated = 0;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

/// Raised when the loss becomes non-finite; carries the failing iteration.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

struct TrainResult {
  UNet<float> net;
  std::vector<LogEntry> log;
};

using CheckpointCallback = std::function<void(std::size_t iteration, const UNet<float>& net)>;

/// Batch-size-1 SGD with momentum: round-robin over samples, augmentation,
/// random tile crop, weighted loss, backward, update.
TrainResult train(const TrainConfig& config, const std::vector<TrainSample>& samples,
                  const CheckpointCallback& on_checkpoint = {});

/// Tab-separated iteration, loss, saturation_count lines.
void write_loss_log(std::ostream& out, const std::vector<LogEntry>& log);

/// Two touching-blob training images for smoke tests and demos.
std::vector<TrainSample> synthetic_blobs(std::size_t size, std::uint64_t seed);

}  // namespace unet
