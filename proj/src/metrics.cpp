#include "unet/metrics.hpp"

#include <map>
#include <unordered_map>
#include <utility>

namespace unet {

namespace {

template <typename A, typename B>
void check_same(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (!a.same_size(b)) {
    throw PreconditionError(std::string(what) + ": size mismatch " + size_str(a.height, a.width) + " vs " +
                            size_str(b.height, b.width));
  }
}

double pairs(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double pixel_error(const Mask& prediction, const Mask& truth) {
  check_same(prediction, truth, "pixel_error");
  if (truth.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += (prediction.data[i] != 0) != (truth.data[i] != 0);
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

double iou(const Mask& prediction, const Mask& truth) {
  check_same(prediction, truth, "iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool a = prediction.data[i] != 0, b = truth.data[i] != 0;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double instance_iou(const InstanceMap& prediction, const InstanceMap& truth) {
  check_same(prediction, truth, "instance_iou");
  std::map<std::uint32_t, std::size_t> truth_area, pred_area;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> overlap;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::uint32_t t = truth.data[i], p = prediction.data[i];
    const bool tv = t != 0 && t != kUnannotated, pv = p != 0 && p != kUnannotated;
    if (tv) ++truth_area[t];
    if (pv) ++pred_area[p];
    if (tv && pv) ++overlap[{t, p}];
  }
  if (truth_area.empty()) return pred_area.empty() ? 1.0 : 0.0;
  std::map<std::uint32_t, double> best;
  for (const auto& [key, inter] : overlap) {
    const double u = static_cast<double>(truth_area[key.first] + pred_area[key.second] - inter);
    best[key.first] = std::max(best[key.first], static_cast<double>(inter) / u);
  }
  double sum = 0;
  for (const auto& [id, area] : truth_area) sum += best.count(id) ? best[id] : 0.0;
  return sum / static_cast<double>(truth_area.size());
}

double rand_error(const InstanceMap& prediction, const InstanceMap& truth) {
  check_same(prediction, truth, "rand_error");
  const double n = static_cast<double>(truth.size());
  if (truth.size() < 2) return 0.0;
  std::unordered_map<std::uint32_t, double> a, b;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    a[truth.data[i]] += 1;
    b[prediction.data[i]] += 1;
    joint[{truth.data[i], prediction.data[i]}] += 1;
  }
  double sa = 0, sb = 0, sj = 0;
  for (const auto& [k, v] : a) sa += pairs(v);
  for (const auto& [k, v] : b) sb += pairs(v);
  for (const auto& [k, v] : joint) sj += pairs(v);
  // Pairs split in exactly one partition.
  const double disagreements = sa + sb - 2.0 * sj;
  return disagreements / pairs(n);
}

InstanceMap connected_components(const Mask& mask) {
  InstanceMap out(mask.height, mask.width);
  std::uint32_t next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.data[start] || out.data[start]) continue;
    out.data[start] = ++next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const std::size_t y = i / mask.width, x = i % mask.width;
      auto visit = [&](std::size_t j) {
        if (mask.data[j] && !out.data[j]) {
          out.data[j] = next;
          stack.push_back(j);
        }
      };
      if (y > 0) visit(i - mask.width);
      if (y + 1 < mask.height) visit(i + mask.width);
      if (x > 0) visit(i - 1);
      if (x + 1 < mask.width) visit(i + 1);
    }
  }
  return out;
}

Mask foreground(const InstanceMap& instances) {
  Mask m(instances.height, instances.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = instances.data[i] != 0 && instances.data[i] != kUnannotated;
  return m;
}

Mask foreground(const ClassMap& classes, std::uint8_t fg) {
  Mask m(classes.height, classes.width);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = classes.data[i] == fg;
  return m;
}

}  // namespace unet
