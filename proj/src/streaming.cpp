#include "sqdmap/streaming.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>

namespace sqdmap {

void StreamConfig::validate() const {
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (dn_query_budget < 1) {
    throw std::invalid_argument("dn_query_budget must be >= 1");
  }
  if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  range.validate();
  noise.validate();
  match.validate();
}

std::vector<std::size_t> select_top_k(const std::vector<double>& scores,
                                      std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  if (order.size() > k) order.resize(k);
  return order;
}

StreamState propagate_queries(const StreamState& state, const SE2Transform& T,
                              const DenseNetworkSpec& phi_t, int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (state.queries.size() != state.scores.size() ||
      state.queries.size() != state.ref_points.size()) {
    throw std::invalid_argument("stream state lists out of alignment");
  }
  const int dim = state.queries.empty()
                      ? phi_t.output_dim()
                      : static_cast<int>(state.queries.front().values.size());
  if (phi_t.input_dim() != dim + 9 || phi_t.output_dim() != dim) {
    throw std::invalid_argument("dimension mismatch");
  }
  for (const QueryEmbedding& q : state.queries) {
    if (static_cast<int>(q.values.size()) != dim) {
      throw std::invalid_argument("dimension mismatch");
    }
  }

  const std::vector<std::size_t> keep =
      select_top_k(state.scores, static_cast<std::size_t>(k));
  const std::array<double, 9> flat = T.matrix_row_major();

  StreamState out;
  out.frame_index = state.frame_index;
  out.queries.resize(keep.size(), QueryEmbedding{});
  out.scores.resize(keep.size());
  std::vector<Polyline> refs;
  refs.reserve(keep.size());
  for (std::size_t idx : keep) {
    refs.push_back(apply_se2(T, state.ref_points[idx]));
  }
  out.ref_points = std::move(refs);

  const std::int64_t m = static_cast<std::int64_t>(keep.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    const QueryEmbedding& q = state.queries[keep[i]];
    std::vector<double> input;
    input.reserve(q.values.size() + 9);
    input.insert(input.end(), q.values.begin(), q.values.end());
    input.insert(input.end(), flat.begin(), flat.end());
    std::vector<double> update = phi_t.forward(input);
    for (std::size_t d = 0; d < update.size(); ++d) {
      update[d] += q.values[d];
    }
    out.queries[i] = QueryEmbedding{std::move(update)};
    out.scores[i] = state.scores[keep[i]];
  }
  return out;
}

namespace {

bool points_identical(const Polyline& a, const Polyline& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].x != b[i].x || a[i].y != b[i].y) return false;
  }
  return true;
}

}  // namespace

std::pair<std::vector<MapElement>, std::vector<int>> warp_and_clip_previous(
    const std::vector<MapElement>& prev_elements, const SE2Transform& T,
    const PerceptionRange& range, int n_points) {
  std::vector<MapElement> out;
  std::vector<int> source_indices;
  for (std::size_t j = 0; j < prev_elements.size(); ++j) {
    Polyline warped = apply_se2(T, prev_elements[j].points);
    std::optional<Polyline> clipped = clip_to_range(warped, range);
    if (!clipped) continue;
    // A curve the clip left untouched and that already has the target count
    // passes through verbatim; redistributing its points would only smear
    // exactness for no gain.
    Polyline resampled =
        (points_identical(*clipped, warped) &&
         clipped->size() == static_cast<std::size_t>(n_points))
            ? std::move(*clipped)
            : resample_polyline(*clipped, n_points);
    out.push_back(MapElement{prev_elements[j].cls, std::move(resampled)});
    source_indices.push_back(static_cast<int>(j));
  }
  return {std::move(out), std::move(source_indices)};
}

DnBatch assemble_dn_batch(const std::vector<MapElement>& current_gt,
                          const std::vector<MapElement>& prev_gt_warped,
                          const std::vector<MatchResult>& matches,
                          const StreamConfig& cfg, RngState& rng) {
  cfg.validate();
  DnBatch batch;
  if (current_gt.empty()) return batch;
  if (!matches.empty() && matches.size() != current_gt.size()) {
    throw std::invalid_argument("matches not aligned with current GT");
  }

  const int group_size = static_cast<int>(current_gt.size());
  batch.group_size = group_size;
  batch.groups = std::max(1, cfg.dn_query_budget / group_size);
  batch.samples.reserve(static_cast<std::size_t>(batch.groups) * group_size);

  for (int g = 0; g < batch.groups; ++g) {
    for (int i = 0; i < group_size; ++i) {
      const bool matched = !matches.empty() && matches[i].matched;
      NoisySample sample =
          matched
              ? make_noisy_instance(
                    prev_gt_warped[static_cast<std::size_t>(
                        *matches[i].prev_index)],
                    i, SampleSource::kStream,
                    decay_rate(matches[i].distance, matches[i].threshold,
                               cfg.match.alpha, cfg.noise.gamma),
                    cfg.noise, cfg.num_classes, rng)
              : make_noisy_instance(current_gt[static_cast<std::size_t>(i)], i,
                                    SampleSource::kNormal, 1.0, cfg.noise,
                                    cfg.num_classes, rng);
      batch.target_indices.push_back(i);
      batch.samples.push_back(std::move(sample));
    }
  }
  return batch;
}

std::vector<QueryEmbedding> build_denoise_queries(const DnBatch& batch,
                                                  const NetworkBundle& nets) {
  // Validate serially; a throw must not originate inside the parallel region.
  for (const NoisySample& sample : batch.samples) {
    if (static_cast<int>(sample.element.points.size()) != nets.config.n_points) {
      throw std::invalid_argument("wrong point count");
    }
    if (sample.element.cls < 0 ||
        sample.element.cls >= nets.class_table.num_classes()) {
      throw std::invalid_argument("class id out of range");
    }
  }
  std::vector<QueryEmbedding> out(batch.samples.size(), QueryEmbedding{});
  const std::int64_t n = static_cast<std::int64_t>(batch.samples.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = build_denoise_query(batch.samples[i].element, nets);
  }
  return out;
}

namespace {

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::pair<StreamState, FrameReport> run_stream_frame(
    const std::optional<StreamState>& state, const FrameRecord& frame,
    const std::optional<FrameRecord>& prev_frame, const StreamConfig& cfg,
    const NetworkBundle& nets, RngState& rng) {
  cfg.validate();
  if (nets.config.n_points != cfg.n_points ||
      nets.config.num_classes != cfg.num_classes) {
    throw std::invalid_argument("network bundle config disagrees with stream config");
  }

  FrameReport report;
  report.timestamp = frame.timestamp;
  report.frame_index = state ? state->frame_index + 1 : 0;
  report.num_current = static_cast<int>(frame.elements.size());

  SE2Transform T;  // identity when there is no previous frame
  std::vector<MapElement> warped;
  if (prev_frame) {
    T = relative_transform(prev_frame->ego_pose, frame.ego_pose);
    warped = warp_and_clip_previous(prev_frame->elements, T, cfg.range,
                                    cfg.n_points)
                 .first;
  }
  report.num_prev_warped = static_cast<int>(warped.size());

  report.matches = adaptive_temporal_match(warped, frame.elements, cfg.match);
  double distance_sum = 0.0;
  for (const MatchResult& m : report.matches) {
    if (m.matched) {
      ++report.matched_count;
      distance_sum += m.distance;
    }
  }
  report.mean_distance =
      report.matched_count > 0 ? distance_sum / report.matched_count : 0.0;

  DnBatch batch =
      assemble_dn_batch(frame.elements, warped, report.matches, cfg, rng);
  report.groups = batch.groups;
  report.group_size = batch.group_size;

  const std::vector<QueryEmbedding> dn_queries =
      build_denoise_queries(batch, nets);
  double decay_sum = 0.0;
  for (std::size_t s = 0; s < batch.samples.size(); ++s) {
    const NoisySample& smp = batch.samples[s];
    report.samples.push_back(SampleRecord{smp.original_index, smp.source,
                                          smp.element.cls, smp.noise, smp.decay,
                                          l2_norm(dn_queries[s].values)});
    decay_sum += smp.decay;
  }
  report.mean_decay =
      batch.samples.empty() ? 0.0 : decay_sum / batch.samples.size();

  if (state) {
    const StreamState propagated =
        propagate_queries(*state, T, nets.phi_t, cfg.top_k);
    report.propagated_count = static_cast<int>(propagated.queries.size());
  }

  // Fresh state from the current frame's elements under the synthetic score
  // rule; the decoder that would refine propagated queries is out of scope.
  StreamState next;
  next.frame_index = report.frame_index;
  std::vector<double> scores(frame.elements.size());
  for (std::size_t i = 0; i < frame.elements.size(); ++i) {
    scores[i] =
        report.matches[i].matched ? 1.0 / (1.0 + report.matches[i].distance) : 0.0;
  }
  for (std::size_t idx :
       select_top_k(scores, static_cast<std::size_t>(cfg.top_k))) {
    next.queries.push_back(build_denoise_query(frame.elements[idx], nets));
    next.scores.push_back(scores[idx]);
    next.ref_points.push_back(frame.elements[idx].points);
  }
  return {std::move(next), std::move(report)};
}

}  // namespace sqdmap
