#pragma once

#include <utility>

#include "sqdmap/geometry.hpp"
#include "sqdmap/rng.hpp"

namespace sqdmap {

/// Noise scales for curve denoising. lambda1/lambda2 bound the box shift,
/// lambda3/lambda4 bound the height/width scaling, gamma is the decay scale
/// of dynamic query noising.
struct NoiseParams {
  double lambda1 = 0.6;
  double lambda2 = 0.6;
  double lambda3 = 0.6;
  double lambda4 = 0.6;
  double label_flip_prob = 0.5;
  double gamma = 0.2;

  void validate() const;
};

/// Box-level noise {dx, dy, dw, dh} in meters.
struct NoiseVector {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;

  NoiseVector operator+(const NoiseVector& r) const {
    return {dx + r.dx, dy + r.dy, dw + r.dw, dh + r.dh};
  }
};

enum class SampleSource { kNormal, kStream };

/// A denoising training sample: noised element, its current-frame regression
/// target index, the drawn noise and the decay it was scaled by.
struct NoisySample {
  MapElement element;
  int original_index = -1;
  NoiseVector noise;
  double decay = 1.0;
  SampleSource source = SampleSource::kNormal;
};

/// Random center shift with |dx| < lambda1*w/2 and |dy| < lambda2*h/2
/// (strict); extents unchanged. Degenerate extents force the corresponding
/// component to zero.
std::pair<BoundingRect, NoiseVector> box_shift(const BoundingRect& rect,
                                               const NoiseParams& params,
                                               RngState& rng);

/// Random extent rescale: h' in [(1-lambda3)h, (1+lambda3)h], w' in
/// [(1-lambda4)w, (1+lambda4)w]; center unchanged. Height is drawn first.
std::pair<BoundingRect, NoiseVector> box_scale(const BoundingRect& rect,
                                               const NoiseParams& params,
                                               RngState& rng);

/// Carries each point's box-normalized coordinates from rect into
/// noised_rect. A degenerate source extent (w or h == 0) pins the normalized
/// coordinate to 0, i.e. the point follows the rect center.
Polyline apply_box_noise_to_points(const Polyline& poly,
                                   const BoundingRect& rect,
                                   const BoundingRect& noised_rect);

/// With probability p, replaces cls by a uniformly chosen different class.
/// Throws std::invalid_argument("cannot flip with one class") when p > 0 and
/// num_classes < 2.
int flip_label(int cls, int num_classes, double p, RngState& rng);

/// Noise decay for a temporal instance with warp error `distance` and match
/// threshold `delta`: clamp(1 - distance * alpha / (gamma * delta), 0, 1).
/// Throws std::invalid_argument("invalid threshold") when delta <= 0.
double decay_rate(double distance, double delta, double alpha, double gamma);

/// Full noising of one element: draws shift and scale noise against the
/// element's bounding rect, sums them into one noise vector, applies it
/// scaled by `decay`, and flips the label per params. Draw order: shift
/// (dx, dy), scale (dh, dw), label flip.
NoisySample make_noisy_instance(const MapElement& element, int original_index,
                                SampleSource source, double decay,
                                const NoiseParams& params, int num_classes,
                                RngState& rng);

}  // namespace sqdmap
