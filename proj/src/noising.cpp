#include "sqdmap/noising.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqdmap {

void NoiseParams::validate() const {
  auto scale_ok = [](double v) { return v >= 0.0 && v < 1.0; };
  if (!scale_ok(lambda1) || !scale_ok(lambda2) || !scale_ok(lambda3) ||
      !scale_ok(lambda4)) {
    throw std::invalid_argument("noise scales must be in [0, 1)");
  }
  if (!(label_flip_prob >= 0.0 && label_flip_prob <= 1.0)) {
    throw std::invalid_argument("label flip probability must be in [0, 1]");
  }
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("gamma must be positive");
  }
}

std::pair<BoundingRect, NoiseVector> box_shift(const BoundingRect& rect,
                                               const NoiseParams& params,
                                               RngState& rng) {
  params.validate();
  NoiseVector noise;
  noise.dx = rng.uniform_open_sym(params.lambda1 * rect.w / 2.0);
  noise.dy = rng.uniform_open_sym(params.lambda2 * rect.h / 2.0);
  BoundingRect shifted = rect;
  shifted.x += noise.dx;
  shifted.y += noise.dy;
  return {shifted, noise};
}

std::pair<BoundingRect, NoiseVector> box_scale(const BoundingRect& rect,
                                               const NoiseParams& params,
                                               RngState& rng) {
  params.validate();
  const double new_h =
      rng.uniform((1.0 - params.lambda3) * rect.h, (1.0 + params.lambda3) * rect.h);
  const double new_w =
      rng.uniform((1.0 - params.lambda4) * rect.w, (1.0 + params.lambda4) * rect.w);
  NoiseVector noise;
  noise.dw = new_w - rect.w;
  noise.dh = new_h - rect.h;
  BoundingRect scaled = rect;
  scaled.w = new_w;
  scaled.h = new_h;
  return {scaled, noise};
}

Polyline apply_box_noise_to_points(const Polyline& poly,
                                   const BoundingRect& rect,
                                   const BoundingRect& noised_rect) {
  std::vector<Point2> out;
  out.reserve(poly.size());
  for (const Point2& p : poly.points()) {
    const double u = rect.w != 0.0 ? (p.x - rect.x) / rect.w : 0.0;
    const double v = rect.h != 0.0 ? (p.y - rect.y) / rect.h : 0.0;
    out.push_back({noised_rect.x + u * noised_rect.w,
                   noised_rect.y + v * noised_rect.h});
  }
  return Polyline(std::move(out));
}

int flip_label(int cls, int num_classes, double p, RngState& rng) {
  if (cls < 0 || cls >= num_classes) {
    throw std::invalid_argument("class id out of range");
  }
  if (p > 0.0 && num_classes < 2) {
    throw std::invalid_argument("cannot flip with one class");
  }
  if (!rng.bernoulli(p)) return cls;
  int other = static_cast<int>(
      rng.uniform_below(static_cast<std::uint64_t>(num_classes - 1)));
  if (other >= cls) ++other;
  return other;
}

double decay_rate(double distance, double delta, double alpha, double gamma) {
  if (!(delta > 0.0)) {
    throw std::invalid_argument("invalid threshold");
  }
  if (!(alpha > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("alpha and gamma must be positive");
  }
  return std::clamp(1.0 - distance * alpha / (gamma * delta), 0.0, 1.0);
}

NoisySample make_noisy_instance(const MapElement& element, int original_index,
                                SampleSource source, double decay,
                                const NoiseParams& params, int num_classes,
                                RngState& rng) {
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("decay must be in [0, 1]");
  }
  const BoundingRect rect = min_bounding_rect(element.points);
  const auto [shifted, shift_noise] = box_shift(rect, params, rng);
  const auto [scaled, scale_noise] = box_scale(rect, params, rng);
  const NoiseVector noise = shift_noise + scale_noise;

  BoundingRect noised = rect;
  noised.x += noise.dx * decay;
  noised.y += noise.dy * decay;
  noised.w += noise.dw * decay;
  noised.h += noise.dh * decay;

  Polyline noised_points = apply_box_noise_to_points(element.points, rect, noised);
  const int cls = flip_label(element.cls, num_classes, params.label_flip_prob, rng);
  return NoisySample{MapElement{cls, std::move(noised_points)}, original_index,
                     noise, decay, source};
}

}  // namespace sqdmap
