#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqdmap/geometry.hpp"

namespace sqdmap {

struct EvalConfig {
  std::vector<double> thresholds{0.5, 1.0, 1.5};  // meters, strictly increasing
  std::vector<int> classes{0, 1, 2};
  PerceptionRange range{30.0, 15.0};

  void validate() const;
};

/// Loss weights: map losses (focal, line, translation) and the denoising
/// pair (focal, line).
struct LossWeights {
  double w_focal = 4.0;
  double w_line = 50.0;
  double w_trans = 0.1;
  double w_dn_focal = 4.0;
  double w_dn_line = 50.0;

  void validate() const;
};

struct ScoredPrediction {
  MapElement element;
  double score = 0.0;
};

struct MapLossTerms {
  double focal = 0.0;
  double line = 0.0;
  double trans = 0.0;
};

struct DnLossTerms {
  double focal = 0.0;
  double line = 0.0;
};

struct TotalLosses {
  double map_loss = 0.0;
  double denoise_loss = 0.0;
  double train_loss = 0.0;
};

/// Greedy score-ordered TP/FP assignment: predictions in descending score
/// order each claim the unclaimed GT with minimum Chamfer distance when that
/// distance is below the threshold. Flags are aligned with the input order;
/// 1 = TP. Inputs must be class-homogeneous.
std::vector<std::uint8_t> instance_tp_fp(
    const std::vector<ScoredPrediction>& preds,
    const std::vector<MapElement>& gts, double threshold);

/// All-point interpolated AP averaged over cfg.thresholds. Empty GT with
/// empty predictions is 1.0; empty predictions against GT is 0.0.
double average_precision(const std::vector<ScoredPrediction>& preds,
                         const std::vector<MapElement>& gts,
                         const EvalConfig& cfg);

/// Arithmetic mean of per-class AP values.
double map_score(const std::vector<double>& per_class_ap);

/// Binary focal loss; prob is clamped into [1e-12, 1 - 1e-12].
double focal_loss(double prob, bool positive_target, double alpha_f,
                  double gamma_f);

/// Mean per-point L1 distance, minimized over the two traversal directions
/// of gt. Point counts must match.
double line_loss(const Polyline& pred, const Polyline& gt);

/// Weighted sums: map loss, denoising loss, and their total.
TotalLosses total_losses(const MapLossTerms& map_terms,
                         const DnLossTerms& dn_terms, const LossWeights& w);

struct ClassApResult {
  int cls = 0;
  std::vector<double> ap_per_threshold;
  double ap = 0.0;  // mean over thresholds
};

struct EvalReport {
  std::vector<ClassApResult> per_class;
  double map = 0.0;
};

/// Dataset-level evaluation: TP/FP decided per frame (predictions never
/// match GT of another frame), precision/recall pooled across frames per
/// class and threshold. Frames are processed in parallel; pooling runs in
/// frame order so results are independent of thread count.
EvalReport evaluate_frames(
    const std::vector<std::vector<ScoredPrediction>>& preds_per_frame,
    const std::vector<std::vector<MapElement>>& gts_per_frame,
    const EvalConfig& cfg);

/// Human-readable per-class AP table.
std::string format_eval_table(const EvalReport& report, const EvalConfig& cfg);

}  // namespace sqdmap
