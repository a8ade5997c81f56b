#include "unet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unet/ops.hpp"

namespace unet {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const std::vector<Tensor<double>>& inputs, const ScalarFunction& f) {
  GradTape<double> tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.input(t));
  return tape.value(f(tape, vars))[0];
}

void compare(GradCheckResult& r, double analytic, double numeric, const GradCheckOptions& o) {
  r.max_relative_error = std::max(r.max_relative_error, relative_error(analytic, numeric, o.floor));
  ++r.checked;
}

Tensor<double> random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Values bounded away from zero, so the ReLU kink is never straddled.
Tensor<double> signed_away_from_zero(const Shape& s, Rng& rng) {
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double m = rng.uniform(0.1, 1.0);
    t[i] = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

/// A shuffled ladder of distinct values, so no pooling block is near a tie.
Tensor<double> distinct_values(const Shape& s, Rng& rng) {
  std::vector<double> v(s.size());
  std::iota(v.begin(), v.end(), 0.0);
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  Tensor<double> t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * v[i] - 0.05 * static_cast<double>(v.size());
  return t;
}

ClassMap random_labels(std::size_t h, std::size_t w, std::size_t classes, Rng& rng) {
  ClassMap m(h, w);
  for (auto& l : m.data) l = static_cast<std::uint8_t>(rng.below(classes));
  return m;
}

WeightMap random_weights(std::size_t h, std::size_t w, Rng& rng) {
  WeightMap m(h, w);
  for (auto& v : m.data) v = rng.uniform(0.5, 1.5);
  return m;
}

}  // namespace

GradCheckResult check_gradients(const std::string& name, std::vector<Tensor<double>> inputs,
                                const ScalarFunction& f, const GradCheckOptions& options) {
  GradCheckResult r{name, 0, 0.0, false};
  GradTape<double> tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.input(t));
  tape.backward(f(tape, vars));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor<double> analytic = tape.grad(vars[k]);
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double x = inputs[k][i];
      inputs[k][i] = x + options.step;
      const double up = evaluate(inputs, f);
      inputs[k][i] = x - options.step;
      const double down = evaluate(inputs, f);
      inputs[k][i] = x;
      compare(r, analytic[i], (up - down) / (2.0 * options.step), options);
    }
  }
  r.passed = r.checked > 0 && r.max_relative_error < options.tolerance;
  return r;
}

GradCheckResult check_network_gradients(const std::string& name, UNet<double> net, const Tensor<double>& input,
                                        std::uint64_t seed, const GradCheckOptions& options) {
  using Wide = long double;
  GradCheckResult r{name, 0, 0.0, false};
  Rng coef_rng = Rng::derive(seed, 1);
  const Tensor<double> coef = random_tensor(net.forward(input).shape(), coef_rng);

  GradTape<double> tape;
  Rng mask_rng = Rng::derive(seed, 2);
  const Var in = tape.input(input);
  const auto taped = net.forward(tape, in, Mode::Train, mask_rng);
  tape.backward(ops::dot(tape, taped.logits, coef));
  const std::vector<Tensor<double>> grads = net.gradients(tape, taped);
  const Tensor<double> input_grad = tape.grad(in);

  // The difference quotient is evaluated on an extended-precision copy of the
  // network. Border pixels of the input reach the output through a single
  // chain of edge weights, so their true gradients can be ~1e-7; at step 1e-5
  // the resulting logit changes sit near the rounding floor of 64-bit values.
  UNet<Wide> wide = UNet<Wide>::zeros(net.config());
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    wide.params()[i].weights = net.params()[i].weights.cast<Wide>();
    wide.params()[i].bias = net.params()[i].bias.cast<Wide>();
  }
  // Dropout draws come from a generator reseeded for every evaluation, so each
  // evaluation sees the same mask as the analytic pass.
  auto logits = [&](const Tensor<Wide>& x) {
    GradTape<Wide> t;
    Rng mask = Rng::derive(seed, 2);
    return t.value(wide.forward(t, t.input(x), Mode::Train, mask).logits);
  };
  // Summed term by term so logits untouched by the perturbation cancel exactly.
  auto difference = [&](const Tensor<Wide>& up, const Tensor<Wide>& down) {
    Wide s = 0;
    for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * (up[i] - down[i]);
    return static_cast<double>(s / (2 * static_cast<Wide>(options.step)));
  };
  const Wide h = options.step;

  const std::vector<Tensor<Wide>*> params = wide.parameter_tensors();
  Tensor<Wide> x = input.cast<Wide>();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<Wide>& p = *params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Wide v = p[i];
      p[i] = v + h;
      const Tensor<Wide> up = logits(x);
      p[i] = v - h;
      const Tensor<Wide> down = logits(x);
      p[i] = v;
      compare(r, grads[k][i], difference(up, down), options);
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Wide v = x[i];
    x[i] = v + h;
    const Tensor<Wide> up = logits(x);
    x[i] = v - h;
    const Tensor<Wide> down = logits(x);
    x[i] = v;
    compare(r, input_grad[i], difference(up, down), options);
  }
  r.passed = r.checked > 0 && r.max_relative_error < options.tolerance;
  return r;
}

std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed, const GradCheckOptions& options) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  auto dotted = [](Tensor<double> coef, auto op) {
    return [coef = std::move(coef), op](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::dot(t, op(t, v), coef);
    };
  };

  {
    auto f = dotted(random_tensor({1, 4, 6, 6}, rng), [](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::conv2d(t, v[0], v[1], v[2]);
    });
    out.push_back(check_gradients(
        "conv2d", {random_tensor({1, 3, 8, 8}, rng), random_tensor({4, 3, 3, 3}, rng), random_tensor({1, 4, 1, 1}, rng)},
        f, options));
  }
  {
    auto f = dotted(random_tensor({1, 2, 8, 8}, rng), [](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::conv1x1(t, v[0], v[1], v[2]);
    });
    out.push_back(check_gradients(
        "conv1x1", {random_tensor({1, 4, 8, 8}, rng), random_tensor({2, 4, 1, 1}, rng), random_tensor({1, 2, 1, 1}, rng)},
        f, options));
  }
  {
    auto f = dotted(random_tensor({1, 2, 8, 8}, rng), [](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::upconv2x2(t, v[0], v[1], v[2]);
    });
    out.push_back(check_gradients(
        "upconv2x2",
        {random_tensor({1, 4, 4, 4}, rng), random_tensor({2, 4, 2, 2}, rng), random_tensor({1, 2, 1, 1}, rng)}, f,
        options));
  }
  {
    auto f = dotted(random_tensor({1, 4, 8, 8}, rng),
                    [](GradTape<double>& t, const std::vector<Var>& v) { return ops::relu(t, v[0]); });
    out.push_back(check_gradients("relu", {signed_away_from_zero({1, 4, 8, 8}, rng)}, f, options));
  }
  {
    auto f = dotted(random_tensor({1, 4, 4, 4}, rng),
                    [](GradTape<double>& t, const std::vector<Var>& v) { return ops::maxpool2x2(t, v[0]); });
    out.push_back(check_gradients("maxpool2x2", {distinct_values({1, 4, 8, 8}, rng)}, f, options));
  }
  {
    auto f = dotted(random_tensor({1, 4, 4, 4}, rng), [](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::crop_concat(t, v[0], v[1]);
    });
    out.push_back(
        check_gradients("crop_concat", {random_tensor({1, 2, 8, 8}, rng), random_tensor({1, 2, 4, 4}, rng)}, f, options));
  }
  {
    const std::uint64_t mask_seed = rng.next_u64();
    auto f = dotted(random_tensor({1, 4, 8, 8}, rng), [mask_seed](GradTape<double>& t, const std::vector<Var>& v) {
      Rng mask(mask_seed);
      return ops::dropout(t, v[0], 0.5, Mode::Train, mask);
    });
    out.push_back(check_gradients("dropout", {random_tensor({1, 4, 8, 8}, rng)}, f, options));
  }
  {
    auto f = dotted(random_tensor({1, 4, 8, 8}, rng),
                    [](GradTape<double>& t, const std::vector<Var>& v) { return ops::softmax(t, v[0]); });
    out.push_back(check_gradients("softmax", {random_tensor({1, 4, 8, 8}, rng, -2.0, 2.0)}, f, options));
  }
  {
    const ClassMap labels = random_labels(8, 8, 4, rng);
    const WeightMap weights = random_weights(8, 8, rng);
    auto f = [labels, weights](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::weighted_cross_entropy(t, v[0], labels, weights);
    };
    out.push_back(check_gradients("weighted_cross_entropy", {random_tensor({1, 4, 8, 8}, rng, 0.1, 1.0)}, f, options));
  }
  {
    const ClassMap labels = random_labels(8, 8, 4, rng);
    const WeightMap weights = random_weights(8, 8, rng);
    auto f = [labels, weights](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::softmax_cross_entropy(t, v[0], labels, weights);
    };
    out.push_back(check_gradients("softmax_cross_entropy", {random_tensor({1, 4, 8, 8}, rng, -2.0, 2.0)}, f, options));
  }
  {
    const ClassMap labels = random_labels(8, 8, 3, rng);
    const WeightMap weights = random_weights(8, 8, rng);
    auto f = [labels, weights](GradTape<double>& t, const std::vector<Var>& v) {
      return ops::weighted_cross_entropy(t, ops::softmax(t, v[0]), labels, weights);
    };
    out.push_back(
        check_gradients("softmax+weighted_cross_entropy", {random_tensor({1, 3, 8, 8}, rng, -2.0, 2.0)}, f, options));
  }
  {
    UNetConfig config{2, 2, 1, 2, 0.5};
    Rng init = Rng::derive(seed, 100);
    UNet<double> net = UNet<double>::build(config, init);
    for (auto& p : net.params()) {
      for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] = init.uniform(-0.1, 0.1);
    }
    out.push_back(check_network_gradients("unet(depth=2,base=2)", std::move(net),
                                          random_tensor({1, 1, 44, 44}, init, 0.0, 1.0), seed, options));
  }
  return out;
}

}  // namespace unet
