#pragma once

// Central finite-difference checks of the analytic gradients. The numerical
// side only ever evaluates forward values; it never reads a gradient rule.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "unet/tape.hpp"
#include "unet/tensor.hpp"
#include "unet/unet.hpp"

namespace unet {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor in |a - b| / max(|a|, |b|, floor).
  double floor = 1e-8;
};

struct GradCheckResult {
  std::string name;
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

/// Builds a scalar from the given input variables on a fresh tape.
using ScalarFunction = std::function<Var(GradTape<double>&, const std::vector<Var>&)>;

/// Compares the tape gradient w.r.t. every element of every input with
/// (f(x + h) - f(x - h)) / 2h.
GradCheckResult check_gradients(const std::string& name, std::vector<Tensor<double>> inputs,
                                const ScalarFunction& f, const GradCheckOptions& options = {});

/// Same comparison for every parameter of a network and its input, with a
/// random linear functional of the logits as the scalar.
GradCheckResult check_network_gradients(const std::string& name, UNet<double> net, const Tensor<double>& input,
                                        std::uint64_t seed, const GradCheckOptions& options = {});

/// Every differentiable operator plus a thin depth-2 network.
std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace unet
