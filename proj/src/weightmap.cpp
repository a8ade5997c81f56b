#include "unet/weightmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace unet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_instance(std::uint32_t id) { return id != 0 && id != kUnannotated; }

/// 1-D squared distance transform (lower envelope of parabolas). Infinite
/// entries of f are not sites. All values stay integral, so results are exact.
void sq_distance_1d(const double* f, std::size_t n, double* out, std::vector<std::size_t>& v,
                    std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  std::ptrdiff_t k = -1;
  for (std::size_t q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    const double fq = f[q] + static_cast<double>(q) * static_cast<double>(q);
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const double p = static_cast<double>(v[k]);
      s = (fq - (f[v[k]] + p * p)) / (2.0 * static_cast<double>(q) - 2.0 * p);
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out, out + n, kInf);
    return;
  }
  std::size_t j = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[j + 1] < static_cast<double>(q)) ++j;
    const double d = static_cast<double>(q) - static_cast<double>(v[j]);
    out[q] = d * d + f[v[j]];
  }
}

}  // namespace

void WeightMapParams::validate() const {
  if (!(w0 > 0.0)) throw PreconditionError("weight map: w0 must be > 0");
  if (!(sigma > 0.0)) throw PreconditionError("weight map: sigma must be > 0");
  if (border_radius < 1) throw PreconditionError("weight map: border_radius must be >= 1");
}

ClassMap instances_to_classes(const InstanceMap& instances) {
  ClassMap c(instances.height, instances.width);
  for (std::size_t i = 0; i < instances.size(); ++i) c.data[i] = is_instance(instances.data[i]) ? 1 : 0;
  return c;
}

Mask annotated_mask(const InstanceMap& instances) {
  Mask m(instances.height, instances.width);
  for (std::size_t i = 0; i < instances.size(); ++i) m.data[i] = instances.data[i] != kUnannotated;
  return m;
}

InstanceMap canonicalize(const InstanceMap& instances) {
  InstanceMap out(instances.height, instances.width);
  std::unordered_map<std::uint32_t, std::uint32_t> ids;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::uint32_t id = instances.data[i];
    if (!is_instance(id)) {
      out.data[i] = id;
      continue;
    }
    auto [it, inserted] = ids.try_emplace(id, static_cast<std::uint32_t>(ids.size() + 1));
    out.data[i] = it->second;
  }
  return out;
}

std::vector<double> class_balance_weights(const ClassMap& labels, std::size_t num_classes,
                                          const Mask* annotated) {
  if (annotated && !annotated->same_size(labels)) {
    throw PreconditionError("class_balance_weights: annotation mask size mismatch");
  }
  std::vector<std::size_t> counts(num_classes, 0);
  std::size_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (annotated && !annotated->data[i]) continue;
    const std::uint8_t l = labels.data[i];
    if (l >= num_classes) {
      throw PreconditionError("class_balance_weights: label " + std::to_string(l) + " >= " +
                              std::to_string(num_classes) + " classes");
    }
    ++counts[l];
    ++total;
  }
  const auto present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
  std::vector<double> w(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) w[c] = static_cast<double>(total) / (present * static_cast<double>(counts[c]));
  }
  return w;
}

SeparationBorder separation_border(const InstanceMap& instances, std::size_t radius) {
  if (radius < 1) throw PreconditionError("separation_border: radius must be >= 1");
  const std::size_t H = instances.height, W = instances.width;
  SeparationBorder out{Mask(H, W), instances_to_classes(instances)};
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(radius);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      if (instances(y, x) != 0) continue;
      const std::size_t y0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(y) - r));
      const std::size_t x0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(x) - r));
      const std::size_t y1 = std::min(H - 1, y + radius), x1 = std::min(W - 1, x + radius);
      std::uint32_t first = 0;
      bool border = false;
      for (std::size_t yy = y0; yy <= y1 && !border; ++yy) {
        for (std::size_t xx = x0; xx <= x1; ++xx) {
          const std::uint32_t id = instances(yy, xx);
          if (!is_instance(id)) continue;
          if (first == 0) {
            first = id;
          } else if (id != first) {
            border = true;
            break;
          }
        }
      }
      if (border) {
        out.border(y, x) = 1;
        out.classes(y, x) = 0;
      }
    }
  }
  return out;
}

DistanceMaps distance_maps(const InstanceMap& instances) {
  const std::size_t H = instances.height, W = instances.width;
  DistanceMaps out{Raster<double>(H, W, kInf), Raster<double>(H, W, kInf)};
  // Squared distances are merged first; square roots are taken once at the end.
  Raster<double>& best = out.d1;
  Raster<double>& second = out.d2;

  std::vector<std::uint32_t> ids;
  for (std::uint32_t id : instances.data) {
    if (is_instance(id)) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<double> sq(H * W);
  for (std::uint32_t id : ids) {
    // Column pass over the indicator, then row pass over column results.
#pragma omp parallel
    {
      std::vector<double> f(std::max(H, W)), d(std::max(H, W)), z;
      std::vector<std::size_t> v;
#pragma omp for schedule(static)
      for (long long xx = 0; xx < static_cast<long long>(W); ++xx) {
        const std::size_t x = static_cast<std::size_t>(xx);
        for (std::size_t y = 0; y < H; ++y) f[y] = instances(y, x) == id ? 0.0 : kInf;
        sq_distance_1d(f.data(), H, d.data(), v, z);
        for (std::size_t y = 0; y < H; ++y) sq[y * W + x] = d[y];
      }
#pragma omp for schedule(static)
      for (long long yy = 0; yy < static_cast<long long>(H); ++yy) {
        const std::size_t y = static_cast<std::size_t>(yy);
        std::copy(sq.begin() + y * W, sq.begin() + (y + 1) * W, f.begin());
        sq_distance_1d(f.data(), W, d.data(), v, z);
        for (std::size_t x = 0; x < W; ++x) {
          const double v2 = d[x];
          double& b = best.data[y * W + x];
          double& s = second.data[y * W + x];
          if (v2 < b) {
            s = b;
            b = v2;
          } else if (v2 < s) {
            s = v2;
          }
        }
      }
    }
  }
  for (double& v : best.data) v = std::sqrt(v);
  for (double& v : second.data) v = std::sqrt(v);
  return out;
}

double gap_weight(double class_weight, double d1, double d2, const WeightMapParams& params) {
  const double s = d1 + d2;
  return class_weight + params.w0 * std::exp(-(s * s) / (2.0 * params.sigma * params.sigma));
}

WeightMap weight_map(const InstanceMap& instances, const WeightMapParams& params) {
  params.validate();
  const SeparationBorder border = separation_border(instances, params.border_radius);
  const Mask annotated = annotated_mask(instances);
  const std::vector<double> wc = class_balance_weights(border.classes, 2, &annotated);
  const DistanceMaps dist = distance_maps(instances);
  WeightMap w(instances.height, instances.width);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!annotated.data[i]) continue;
    w.data[i] = gap_weight(wc[border.classes.data[i]], dist.d1.data[i], dist.d2.data[i], params);
  }
  return w;
}

std::uint8_t weight_to_byte(double w) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(w, 0.0, 25.5) * 10.0));
}

}  // namespace unet
