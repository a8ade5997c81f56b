#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "unet/augment.hpp"
#include "unet/gradcheck.hpp"
#include "unet/io.hpp"
#include "unet/kernels.hpp"
#include "unet/metrics.hpp"
#include "unet/tiling.hpp"
#include "unet/train.hpp"
#include "unet/weightmap.hpp"

namespace unet::cli {

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;

  KeyValueConfig config() const {
    KeyValueConfig kv = config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(config_path);
    if (seed) kv.set("seed", std::to_string(*seed));
    if (deterministic) kv.set("deterministic", "true");
    return kv;
  }
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

struct SizesArgs {
  std::size_t depth = 4, min = 1, max = 1024;
};

int cmd_sizes(const SizesArgs& a, std::ostream& out) {
  for (std::size_t s : valid_input_sizes(a.min, a.max, a.depth)) out << s << "\n";
  return 0;
}

struct TrainArgs {
  std::vector<std::string> images, instances;
  std::size_t synthetic = 0;
  std::string checkpoint = "unet.ckpt";
  std::string log;
  std::optional<std::size_t> iterations, tile, depth, base;
  std::optional<double> learning_rate;
};

int cmd_train(const TrainArgs& a, const Globals& g, std::ostream& out) {
  const KeyValueConfig kv = g.config();
  TrainConfig config;
  config.apply(kv);
  if (a.iterations) config.iterations = *a.iterations;
  if (a.tile) config.tile_size = *a.tile;
  if (a.depth) config.net.depth = *a.depth;
  if (a.base) config.net.base_channels = *a.base;
  if (a.learning_rate) config.learning_rate = *a.learning_rate;

  std::vector<TrainSample> samples;
  if (a.synthetic > 0) {
    samples = synthetic_blobs(a.synthetic, config.seed);
  } else {
    if (a.images.empty()) throw PreconditionError("train: give --image/--instances pairs or --synthetic SIZE");
    if (a.images.size() != a.instances.size()) {
      throw PreconditionError("train: " + std::to_string(a.images.size()) + " images but " +
                              std::to_string(a.instances.size()) + " instance maps");
    }
    for (std::size_t i = 0; i < a.images.size(); ++i) {
      samples.push_back({to_image(read_pgm(a.images[i])), to_instances(read_pgm(a.instances[i]))});
    }
  }

  const auto save = [&](std::size_t iteration, const UNet<float>& net) {
    save_checkpoint(a.checkpoint + "." + std::to_string(iteration), net);
  };
  const TrainResult result = train(config, samples, save);
  save_checkpoint(a.checkpoint, result.net);
  if (!a.log.empty()) {
    std::ofstream log(a.log);
    if (!log) throw FormatError("cannot write " + a.log);
    write_loss_log(log, result.log);
  }
  if (!result.log.empty()) {
    out << "iterations " << result.log.size() << " final_loss " << result.log.back().loss << "\n";
  }
  return 0;
}

struct PredictArgs {
  std::string checkpoint, input, output, probabilities;
  std::optional<std::size_t> tile;
  std::string transforms = "all";
};

std::size_t default_tile(const KeyValueConfig& kv, std::size_t depth) {
  if (kv.has("tile_size")) return kv.get_size("tile_size", 0);
  const auto sizes = valid_input_sizes(1, 572, depth);
  if (sizes.empty()) throw PreconditionError("no valid tile size <= 572 for depth " + std::to_string(depth));
  return sizes.back();
}

int cmd_predict(const PredictArgs& a, const Globals& g, std::ostream& out) {
  const UNet<float> net = load_checkpoint<float>(a.checkpoint);
  const Image image = to_image(read_pgm(a.input));
  const std::size_t tile = a.tile ? *a.tile : default_tile(g.config(), net.config().depth);
  const ProbabilityMap probs = rotate_average(net, image, parse_dihedral_list(a.transforms), tile);
  const ClassMap classes = argmax(probs);
  write_pgm(a.output, from_mask(foreground(classes)), "unet foreground mask");
  if (!a.probabilities.empty()) {
    write_pgm(a.probabilities, from_image(probs[1]), "unet class-1 probability, value = round(p * 255)");
  }
  out << "predicted " << size_str(image.height, image.width) << " with tile " << tile << "\n";
  return 0;
}

struct WeightmapArgs {
  std::string instances, output;
  std::optional<double> w0, sigma;
};

WeightMapParams weight_params(const KeyValueConfig& kv) {
  WeightMapParams p;
  p.w0 = kv.get_double("w0", p.w0);
  p.sigma = kv.get_double("sigma", p.sigma);
  p.border_radius = kv.get_size("border_radius", p.border_radius);
  return p;
}

const char* kWeightComment =
    "unet weight map\n"
    "value = round(min(w, 25.5) * 10); w = value / 10, saturating at 25.5";

int cmd_weightmap(const WeightmapArgs& a, const Globals& g, std::ostream& out) {
  WeightMapParams p = weight_params(g.config());
  if (a.w0) p.w0 = *a.w0;
  if (a.sigma) p.sigma = *a.sigma;
  const WeightMap w = weight_map(to_instances(read_pgm(a.instances)), p);
  write_pgm(a.output, from_weights(w), kWeightComment);
  out << "max_weight " << *std::max_element(w.data.begin(), w.data.end()) << "\n";
  return 0;
}

struct AugmentArgs {
  std::string image, instances, out_image, out_instances, out_weights;
};

int cmd_augment(const AugmentArgs& a, const Globals& g, std::ostream& out) {
  const KeyValueConfig kv = g.config();
  TrainConfig config;
  config.apply(kv);
  Rng rng(config.seed);
  const AugmentedSample s = augment_sample(to_image(read_pgm(a.image)), to_instances(read_pgm(a.instances)),
                                           !a.out_weights.empty(), config.weights, config.augmentation, rng);
  write_pgm(a.out_image, from_image(s.image));
  write_pgm(a.out_instances, from_instances(s.instances));
  if (!a.out_weights.empty()) write_pgm(a.out_weights, from_weights(*s.weights), kWeightComment);
  out << "augmented " << size_str(s.image.height, s.image.width) << "\n";
  return 0;
}

struct EvalArgs {
  std::string prediction, truth;
};

/// 16-bit rasters are instance maps; anything else is a mask split into connected components.
InstanceMap segments(const RasterFile& f) {
  if (f.maxval == 65535) return to_instances(f);
  return connected_components(to_mask(f));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const RasterFile pred = read_pgm(a.prediction);
  const RasterFile truth = read_pgm(a.truth);
  const InstanceMap ps = segments(pred), ts = segments(truth);
  const Mask pm = foreground(ps), tm = foreground(ts);
  out << std::fixed << std::setprecision(6);
  out << "iou " << iou(pm, tm) << "\n";
  out << "pixel_error " << pixel_error(pm, tm) << "\n";
  out << "rand_error " << rand_error(ps, ts) << "\n";
  out << "instance_iou " << instance_iou(ps, ts) << "\n";
  return 0;
}

struct GradcheckArgs {
  double tolerance = 1e-4;
  double step = 1e-5;
};

int cmd_gradcheck(const GradcheckArgs& a, const Globals& g, std::ostream& out) {
  GradCheckOptions o;
  o.tolerance = a.tolerance;
  o.step = a.step;
  bool ok = true;
  out << std::scientific << std::setprecision(3);
  for (const GradCheckResult& r : run_gradient_suite(g.seed.value_or(0), o)) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " checked=" << r.checked
        << " max_rel_error=" << r.max_relative_error << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"U-Net segmentation engine", "unet"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("--deterministic", g.deterministic, "single-threaded kernels for reproducible runs");

  SizesArgs sizes;
  CLI::App* sizes_cmd = app.add_subcommand("sizes", "print valid input tile sizes");
  sizes_cmd->add_option("--depth", sizes.depth, "network depth");
  sizes_cmd->add_option("--min", sizes.min, "smallest size to consider");
  sizes_cmd->add_option("--max", sizes.max, "largest size to consider");

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train a network");
  train_cmd->add_option("--image", tr.images, "8-bit training image (repeatable)");
  train_cmd->add_option("--instances", tr.instances, "16-bit instance map paired with --image (repeatable)");
  train_cmd->add_option("--synthetic", tr.synthetic, "train on the built-in two-image blob set of this size");
  train_cmd->add_option("--checkpoint", tr.checkpoint, "output checkpoint path");
  train_cmd->add_option("--log", tr.log, "loss log path (iteration, loss, saturation count)");
  train_cmd->add_option("--iterations", tr.iterations);
  train_cmd->add_option("--tile", tr.tile, "input tile size");
  train_cmd->add_option("--depth", tr.depth);
  train_cmd->add_option("--base", tr.base, "channels at the first level");
  train_cmd->add_option("--lr", tr.learning_rate, "learning rate");

  PredictArgs pr;
  CLI::App* predict_cmd = app.add_subcommand("predict", "segment an image");
  predict_cmd->add_option("--checkpoint", pr.checkpoint)->required();
  predict_cmd->add_option("--input", pr.input, "8-bit image")->required();
  predict_cmd->add_option("--output", pr.output, "foreground mask")->required();
  predict_cmd->add_option("--probabilities", pr.probabilities, "class-1 probability raster");
  predict_cmd->add_option("--tile", pr.tile, "input tile size");
  predict_cmd->add_option("--transforms", pr.transforms, "all, identity, or a list such as r0,r90,f0");

  WeightmapArgs wm;
  CLI::App* weight_cmd = app.add_subcommand("weightmap", "compute the loss weight map of an instance map");
  weight_cmd->add_option("--instances", wm.instances)->required();
  weight_cmd->add_option("--output", wm.output)->required();
  weight_cmd->add_option("--w0", wm.w0);
  weight_cmd->add_option("--sigma", wm.sigma);

  AugmentArgs au;
  CLI::App* augment_cmd = app.add_subcommand("augment", "write one augmented training sample");
  augment_cmd->add_option("--image", au.image)->required();
  augment_cmd->add_option("--instances", au.instances)->required();
  augment_cmd->add_option("--out-image", au.out_image)->required();
  augment_cmd->add_option("--out-instances", au.out_instances)->required();
  augment_cmd->add_option("--out-weights", au.out_weights);

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "compare a prediction with ground truth");
  eval_cmd->add_option("--prediction", ev.prediction)->required();
  eval_cmd->add_option("--truth", ev.truth)->required();

  GradcheckArgs gc;
  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad_cmd->add_option("--tolerance", gc.tolerance);
  grad_cmd->add_option("--step", gc.step);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "unet: " << one_line(e.what()) << "\n" << app.help();
    return 2;
  }

  try {
    if (sizes_cmd->parsed()) return cmd_sizes(sizes, out);
    if (train_cmd->parsed()) return cmd_train(tr, g, out);
    if (predict_cmd->parsed()) return cmd_predict(pr, g, out);
    if (weight_cmd->parsed()) return cmd_weightmap(wm, g, out);
    if (augment_cmd->parsed()) return cmd_augment(au, g, out);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (grad_cmd->parsed()) {
      if (g.deterministic) set_num_threads(1);
      return cmd_gradcheck(gc, g, out);
    }
  } catch (const std::exception& e) {
    err << "unet: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace unet::cli
