#include "sqdmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sqdmap/matching.hpp"

namespace sqdmap {

void EvalConfig::validate() const {
  if (thresholds.empty()) throw std::invalid_argument("no thresholds");
  double prev = 0.0;
  for (double t : thresholds) {
    if (!(t > prev)) {
      throw std::invalid_argument("thresholds must be strictly increasing and positive");
    }
    prev = t;
  }
  if (classes.empty()) throw std::invalid_argument("no classes");
  range.validate();
}

void LossWeights::validate() const {
  if (w_focal < 0 || w_line < 0 || w_trans < 0 || w_dn_focal < 0 || w_dn_line < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
}

std::vector<std::uint8_t> instance_tp_fp(
    const std::vector<ScoredPrediction>& preds,
    const std::vector<MapElement>& gts, double threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });

  std::vector<std::uint8_t> flags(preds.size(), 0);
  std::vector<std::uint8_t> claimed(gts.size(), 0);
  for (std::size_t idx : order) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      const double d = chamfer(preds[idx].element.points.span(),
                               gts[g].points.span());
      if (d < best) {
        best = d;
        best_gt = g;
      }
    }
    if (best_gt < gts.size() && best < threshold) {
      claimed[best_gt] = 1;
      flags[idx] = 1;
    }
  }
  return flags;
}

namespace {

// All-point interpolated AP from pooled (score, tp) pairs.
double ap_all_point(std::vector<std::pair<double, std::uint8_t>> scored,
                    std::size_t num_gt) {
  if (num_gt == 0) return scored.empty() ? 1.0 : 0.0;
  if (scored.empty()) return 0.0;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });

  const std::size_t n = scored.size();
  std::vector<double> precision(n), recall(n);
  double tp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += scored[i].second ? 1.0 : 0.0;
    precision[i] = tp / static_cast<double>(i + 1);
    recall[i] = tp / static_cast<double>(num_gt);
  }
  // Monotone envelope of precision from the right.
  for (std::size_t i = n - 1; i-- > 0;) {
    precision[i] = std::max(precision[i], precision[i + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

double average_precision(const std::vector<ScoredPrediction>& preds,
                         const std::vector<MapElement>& gts,
                         const EvalConfig& cfg) {
  cfg.validate();
  double sum = 0.0;
  for (double threshold : cfg.thresholds) {
    const std::vector<std::uint8_t> flags = instance_tp_fp(preds, gts, threshold);
    std::vector<std::pair<double, std::uint8_t>> scored;
    scored.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      scored.emplace_back(preds[i].score, flags[i]);
    }
    sum += ap_all_point(std::move(scored), gts.size());
  }
  return sum / static_cast<double>(cfg.thresholds.size());
}

double map_score(const std::vector<double>& per_class_ap) {
  if (per_class_ap.empty()) {
    throw std::invalid_argument("empty AP list");
  }
  double sum = 0.0;
  for (double ap : per_class_ap) sum += ap;
  return sum / static_cast<double>(per_class_ap.size());
}

double focal_loss(double prob, bool positive_target, double alpha_f,
                  double gamma_f) {
  const double p = std::clamp(prob, 1e-12, 1.0 - 1e-12);
  if (positive_target) {
    return -alpha_f * std::pow(1.0 - p, gamma_f) * std::log(p);
  }
  return -(1.0 - alpha_f) * std::pow(p, gamma_f) * std::log(1.0 - p);
}

double line_loss(const Polyline& pred, const Polyline& gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("point count mismatch");
  }
  const std::size_t n = pred.size();
  double forward = 0.0, reversed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    forward += std::abs(pred[i].x - gt[i].x) + std::abs(pred[i].y - gt[i].y);
    const Point2& r = gt[n - 1 - i];
    reversed += std::abs(pred[i].x - r.x) + std::abs(pred[i].y - r.y);
  }
  return std::min(forward, reversed) / static_cast<double>(n);
}

TotalLosses total_losses(const MapLossTerms& map_terms,
                         const DnLossTerms& dn_terms, const LossWeights& w) {
  w.validate();
  TotalLosses out;
  out.map_loss = w.w_focal * map_terms.focal + w.w_line * map_terms.line +
                 w.w_trans * map_terms.trans;
  out.denoise_loss = w.w_dn_focal * dn_terms.focal + w.w_dn_line * dn_terms.line;
  out.train_loss = out.map_loss + out.denoise_loss;
  return out;
}

EvalReport evaluate_frames(
    const std::vector<std::vector<ScoredPrediction>>& preds_per_frame,
    const std::vector<std::vector<MapElement>>& gts_per_frame,
    const EvalConfig& cfg) {
  cfg.validate();
  if (preds_per_frame.size() != gts_per_frame.size()) {
    throw std::invalid_argument("frame count mismatch between predictions and GT");
  }
  const std::int64_t num_frames = static_cast<std::int64_t>(gts_per_frame.size());

  // Split once by class so the per-frame work below is pure lookups.
  struct FrameSplit {
    std::vector<std::vector<ScoredPrediction>> preds;  // per class slot
    std::vector<std::vector<MapElement>> gts;
  };
  std::vector<FrameSplit> split(static_cast<std::size_t>(num_frames));
  for (std::int64_t f = 0; f < num_frames; ++f) {
    auto& s = split[f];
    s.preds.resize(cfg.classes.size());
    s.gts.resize(cfg.classes.size());
    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
      for (const auto& p : preds_per_frame[f]) {
        if (p.element.cls == cfg.classes[c]) s.preds[c].push_back(p);
      }
      for (const auto& g : gts_per_frame[f]) {
        if (g.cls == cfg.classes[c]) s.gts[c].push_back(g);
      }
    }
  }

  // flags[f][c][t] for frame f, class slot c, threshold t.
  std::vector<std::vector<std::vector<std::vector<std::uint8_t>>>> flags(
      static_cast<std::size_t>(num_frames));

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t f = 0; f < num_frames; ++f) {
    auto& frame_flags = flags[f];
    frame_flags.resize(cfg.classes.size());
    for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
      frame_flags[c].resize(cfg.thresholds.size());
      for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
        frame_flags[c][t] =
            instance_tp_fp(split[f].preds[c], split[f].gts[c], cfg.thresholds[t]);
      }
    }
  }

  EvalReport report;
  std::vector<double> per_class_ap;
  for (std::size_t c = 0; c < cfg.classes.size(); ++c) {
    ClassApResult res;
    res.cls = cfg.classes[c];
    for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
      std::vector<std::pair<double, std::uint8_t>> pooled;
      std::size_t num_gt = 0;
      for (std::int64_t f = 0; f < num_frames; ++f) {
        const auto& fp = split[f].preds[c];
        for (std::size_t i = 0; i < fp.size(); ++i) {
          pooled.emplace_back(fp[i].score, flags[f][c][t][i]);
        }
        num_gt += split[f].gts[c].size();
      }
      res.ap_per_threshold.push_back(ap_all_point(std::move(pooled), num_gt));
    }
    res.ap = map_score(res.ap_per_threshold);
    per_class_ap.push_back(res.ap);
    report.per_class.push_back(std::move(res));
  }
  report.map = map_score(per_class_ap);
  return report;
}

std::string format_eval_table(const EvalReport& report, const EvalConfig& cfg) {
  std::ostringstream out;
  char buf[64];
  out << "class      ";
  for (double t : cfg.thresholds) {
    std::snprintf(buf, sizeof(buf), "AP@%-6.2f", t);
    out << buf;
  }
  out << "AP\n";
  static const char* kNames[] = {"ped-cross", "divider", "boundary"};
  for (const auto& row : report.per_class) {
    const char* name = (row.cls >= 0 && row.cls < 3) ? kNames[row.cls] : "class";
    std::snprintf(buf, sizeof(buf), "%-10s ", name);
    out << buf;
    for (double ap : row.ap_per_threshold) {
      std::snprintf(buf, sizeof(buf), "%-9.4f", ap);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.4f\n", row.ap);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mAP: %.4f\n", report.map);
  out << buf;
  return out.str();
}

}  // namespace sqdmap
