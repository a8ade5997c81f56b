#include "unet/train.hpp"

#include <cmath>
#include <ostream>

#include "unet/kernels.hpp"
#include "unet/ops.hpp"
#include "unet/optim.hpp"

namespace unet {

void TrainConfig::apply(const KeyValueConfig& kv) {
  learning_rate = kv.get_double("learning_rate", learning_rate);
  momentum = kv.get_double("momentum", momentum);
  iterations = kv.get_size("iterations", iterations);
  seed = kv.get_size("seed", seed);
  tile_size = kv.get_size("tile_size", tile_size);
  augment = kv.get_bool("augment", augment);
  checkpoint_every = kv.get_size("checkpoint_every", checkpoint_every);
  deterministic = kv.get_bool("deterministic", deterministic);

  net.depth = kv.get_size("depth", net.depth);
  net.base_channels = kv.get_size("base_channels", net.base_channels);
  net.num_classes = kv.get_size("num_classes", net.num_classes);
  net.dropout_rate = kv.get_double("dropout_rate", net.dropout_rate);

  augmentation.grid_size = kv.get_size("grid_size", augmentation.grid_size);
  augmentation.displacement_sigma = kv.get_double("displacement_sigma", augmentation.displacement_sigma);
  augmentation.rotation_range = kv.get_double("rotation_range", augmentation.rotation_range);
  augmentation.shift_range = kv.get_double("shift_range", augmentation.shift_range);
  augmentation.gray_scale_min = kv.get_double("gray_scale_min", augmentation.gray_scale_min);
  augmentation.gray_scale_max = kv.get_double("gray_scale_max", augmentation.gray_scale_max);
  augmentation.gray_shift_min = kv.get_double("gray_shift_min", augmentation.gray_shift_min);
  augmentation.gray_shift_max = kv.get_double("gray_shift_max", augmentation.gray_shift_max);

  weights.w0 = kv.get_double("w0", weights.w0);
  weights.sigma = kv.get_double("sigma", weights.sigma);
  weights.border_radius = kv.get_size("border_radius", weights.border_radius);
}

void TrainConfig::validate() const {
  net.validate();
  augmentation.validate();
  weights.validate();
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw PreconditionError("train: learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw PreconditionError("train: momentum must be in [0, 1)");
  const SizeCheck s = output_size(tile_size, net.depth);
  if (!s.valid) throw PreconditionError("train: invalid tile_size " + std::to_string(tile_size) + ": " + s.reason);
}

namespace {

class ThreadScope {
 public:
  explicit ThreadScope(bool single) : active_(single) {
    if (active_) set_num_threads(1);
  }
  ~ThreadScope() {
    if (active_) set_num_threads(0);
  }
  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

 private:
  bool active_;
};

Tensor<float> mirrored_window(const Image& img, std::ptrdiff_t y0, std::ptrdiff_t x0, std::size_t size) {
  Tensor<float> t({1, 1, size, size});
  for (std::size_t y = 0; y < size; ++y) {
    const auto sy = static_cast<std::size_t>(reflect_index(y0 + static_cast<std::ptrdiff_t>(y), img.height));
    for (std::size_t x = 0; x < size; ++x) {
      const auto sx = static_cast<std::size_t>(reflect_index(x0 + static_cast<std::ptrdiff_t>(x), img.width));
      t(0, 0, y, x) = static_cast<float>(img(sy, sx));
    }
  }
  return t;
}

template <typename V>
Raster<V> crop(const Raster<V>& r, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  Raster<V> out(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out(y, x) = r(y0 + y, x0 + x);
  return out;
}

/// Top-left corners of o x o windows that contain no unannotated pixel.
std::vector<std::pair<std::size_t, std::size_t>> annotated_windows(const InstanceMap& inst, std::size_t o) {
  const std::size_t H = inst.height, W = inst.width;
  std::vector<std::size_t> integral((H + 1) * (W + 1), 0);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      integral[(y + 1) * (W + 1) + x + 1] = integral[y * (W + 1) + x + 1] + integral[(y + 1) * (W + 1) + x] -
                                            integral[y * (W + 1) + x] + (inst(y, x) == kUnannotated);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t y = 0; y + o <= H; ++y) {
    for (std::size_t x = 0; x + o <= W; ++x) {
      const std::size_t bad = integral[(y + o) * (W + 1) + x + o] - integral[y * (W + 1) + x + o] -
                              integral[(y + o) * (W + 1) + x] + integral[y * (W + 1) + x];
      if (bad == 0) out.emplace_back(y, x);
    }
  }
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<TrainSample>& samples,
                  const CheckpointCallback& on_checkpoint) {
  config.validate();
  if (samples.empty()) throw PreconditionError("train: no training samples");
  if (config.net.in_channels != 1) throw PreconditionError("train: only single-channel images are supported");
  const SizeCheck sizes = output_size(config.tile_size, config.net.depth);
  const std::size_t out_size = sizes.output;
  const auto margin = static_cast<std::ptrdiff_t>((config.tile_size - out_size) / 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TrainSample& s = samples[i];
    if (!s.image.same_size(s.instances)) {
      throw PreconditionError("train: sample " + std::to_string(i) + " image and instance map differ in size");
    }
    if (s.image.height < out_size || s.image.width < out_size) {
      throw PreconditionError("train: sample " + std::to_string(i) + " (" + size_str(s.image.height, s.image.width) +
                              ") is smaller than the output tile " + std::to_string(out_size));
    }
  }

  ThreadScope threads(config.deterministic);
  Rng init(config.seed);
  TrainResult result{UNet<float>::build(config.net, init), {}};
  SgdMomentum<float> optimizer(config.learning_rate, config.momentum);
  std::vector<std::optional<WeightMap>> cached(samples.size());

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const std::size_t index = it % samples.size();
    const TrainSample& sample = samples[index];
    Rng rng = Rng::derive(config.seed, it + 1);

    Image image;
    InstanceMap instances;
    WeightMap weights;
    if (config.augment) {
      AugmentedSample a = augment_sample(sample.image, sample.instances, true, config.weights, config.augmentation, rng);
      image = std::move(a.image);
      instances = std::move(a.instances);
      weights = std::move(*a.weights);
    } else {
      if (!cached[index]) cached[index] = weight_map(sample.instances, config.weights);
      image = sample.image;
      instances = sample.instances;
      weights = *cached[index];
    }

    const auto windows = annotated_windows(instances, out_size);
    if (windows.empty()) {
      throw PreconditionError("train: sample " + std::to_string(index) + " has no fully annotated output window");
    }
    const auto [y0, x0] = windows[rng.below(windows.size())];
    const ClassMap classes = separation_border(instances, config.weights.border_radius).classes;

    GradTape<float> tape;
    const Var input = tape.constant(mirrored_window(image, static_cast<std::ptrdiff_t>(y0) - margin,
                                                    static_cast<std::ptrdiff_t>(x0) - margin, config.tile_size));
    const auto taped = result.net.forward(tape, input, Mode::Train, rng);
    std::size_t saturated = 0;
    const Var loss = ops::softmax_cross_entropy(tape, taped.logits, crop(classes, y0, x0, out_size, out_size),
                                                crop(weights, y0, x0, out_size, out_size), &saturated);
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) {
      throw TrainingDiverged(it, "train: non-finite loss at iteration " + std::to_string(it));
    }
    tape.backward(loss);
    const std::vector<Tensor<float>> grads = result.net.gradients(tape, taped);
    try {
      optimizer.step(result.net.parameter_tensors(), grads);
    } catch (const PreconditionError& e) {
      throw TrainingDiverged(it, std::string(e.what()) + " at iteration " + std::to_string(it));
    }
    result.log.push_back({it, value, saturated});
    if (on_checkpoint && config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0) {
      on_checkpoint(it + 1, result.net);
    }
  }
  return result;
}

void write_loss_log(std::ostream& out, const std::vector<LogEntry>& log) {
  const auto old = out.precision(9);
  for (const LogEntry& e : log) out << e.iteration << '\t' << e.loss << '\t' << e.saturated << '\n';
  out.precision(old);
}

std::vector<TrainSample> synthetic_blobs(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainSample> out;
  const double r = static_cast<double>(size) / 7.0;
  // Centers 2r + 2 apart leave a gap of about two pixels between neighbours.
  const double step = 2.0 * r + 2.0;
  const double mid = (static_cast<double>(size) - 1.0) / 2.0;
  const std::vector<std::vector<std::array<double, 2>>> layouts = {
      {{mid, mid - step}, {mid, mid}, {mid, mid + step}},
      {{mid - step / 2, mid - step / 2}, {mid - step / 2, mid + step / 2}, {mid + step / 2, mid - step / 2},
       {mid + step / 2, mid + step / 2}},
  };
  for (const auto& centers : layouts) {
    TrainSample s{Image(size, size), InstanceMap(size, size)};
    std::vector<std::array<double, 3>> blobs;
    for (const auto& c : centers) {
      blobs.push_back({c[0] + rng.uniform(-0.5, 0.5), c[1] + rng.uniform(-0.5, 0.5), r + rng.uniform(-0.25, 0.25)});
    }
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        double v = 0.15;
        for (std::size_t b = 0; b < blobs.size(); ++b) {
          const double dy = static_cast<double>(y) - blobs[b][0], dx = static_cast<double>(x) - blobs[b][1];
          if (dy * dy + dx * dx <= blobs[b][2] * blobs[b][2]) {
            s.instances(y, x) = static_cast<std::uint32_t>(b + 1);
            v = 0.75;
          }
        }
        s.image(y, x) = std::clamp(v + rng.normal(0.0, 0.05), 0.0, 1.0);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace unet
