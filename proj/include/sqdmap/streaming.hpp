#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "sqdmap/embedding.hpp"
#include "sqdmap/geometry.hpp"
#include "sqdmap/matching.hpp"
#include "sqdmap/noising.hpp"

namespace sqdmap {

struct StreamConfig {
  int top_k = 20;
  int dn_query_budget = 60;
  int n_points = 20;
  int num_classes = 3;
  PerceptionRange range{30.0, 15.0};
  NoiseParams noise{};
  MatchParams match{};

  void validate() const;
};

/// Queries, scores and reference polylines carried between frames. The three
/// lists stay index-aligned and never exceed top_k entries.
struct StreamState {
  std::vector<QueryEmbedding> queries;
  std::vector<double> scores;
  std::vector<Polyline> ref_points;
  int frame_index = 0;
};

/// One frame's worth of denoising samples: `groups` repetitions of one
/// sample per current GT element, sized to the query budget.
struct DnBatch {
  std::vector<NoisySample> samples;
  int groups = 0;
  int group_size = 0;  // == number of current GT elements
  std::vector<int> target_indices;  // per-sample current-GT index
};

/// Ground-truth snapshot of one frame: world-frame ego pose plus the
/// in-range, fixed-n map elements in the ego frame.
struct FrameRecord {
  SE2Transform ego_pose;
  std::vector<MapElement> elements;
  double timestamp = 0.0;
};

struct SampleRecord {
  int target_index = -1;
  SampleSource source = SampleSource::kNormal;
  int cls = 0;  // possibly flipped
  NoiseVector noise;
  double decay = 1.0;
  double query_norm = 0.0;  // L2 norm of the built denoising query
};

/// Per-frame pipeline report: match statistics, batch layout and one record
/// per denoising sample. Serialized as one JSON record per frame by the
/// scenario module.
struct FrameReport {
  int frame_index = 0;
  double timestamp = 0.0;
  int num_current = 0;
  int num_prev_warped = 0;
  std::vector<MatchResult> matches;
  int matched_count = 0;
  double mean_distance = 0.0;  // over matched results
  double mean_decay = 0.0;     // over all samples
  int groups = 0;
  int group_size = 0;
  std::vector<SampleRecord> samples;
  int propagated_count = 0;
};

/// Indices of the k highest scores, stable by index on ties, in selection
/// order (best first).
std::vector<std::size_t> select_top_k(const std::vector<double>& scores,
                                      std::size_t k);

/// Temporal query propagation: keeps the top-k entries, maps each reference
/// polyline through T, and updates each query by the residual form
/// q' = phi_t(Concat(q, Flatten(T))) + q with T flattened row-major (9
/// values). Scores are carried unchanged; frame_index is left to the caller.
StreamState propagate_queries(const StreamState& state, const SE2Transform& T,
                              const DenseNetworkSpec& phi_t, int k);

/// Warp previous-frame elements into the current frame, clip them to the
/// range and resample survivors to n_points. Returns the surviving elements
/// plus, aligned, the index each one had in the input list.
std::pair<std::vector<MapElement>, std::vector<int>> warp_and_clip_previous(
    const std::vector<MapElement>& prev_elements, const SE2Transform& T,
    const PerceptionRange& range, int n_points);

/// Builds the per-frame denoising batch: groups = max(1, budget / |GT|);
/// within each group every current GT element yields one sample. Matched
/// elements noise the warped previous element with decay from its warp error
/// (stream denoising); unmatched ones noise the current element with decay 1
/// (normal denoising). Targets always point at current GT. An empty or
/// missing `matches` list is treated as all-unmatched.
DnBatch assemble_dn_batch(const std::vector<MapElement>& current_gt,
                          const std::vector<MapElement>& prev_gt_warped,
                          const std::vector<MatchResult>& matches,
                          const StreamConfig& cfg, RngState& rng);

/// Query embeddings for every sample in the batch, in batch order.
/// Parallelized over samples with OpenMP; bit-identical for any thread count.
std::vector<QueryEmbedding> build_denoise_queries(const DnBatch& batch,
                                                  const NetworkBundle& nets);

/// One full pipeline step. Computes the relative transform from the previous
/// frame, warps and clips its GT, runs adaptive temporal matching, assembles
/// and embeds the denoising batch, propagates the incoming stream state, and
/// rebuilds the state from the current frame's elements.
///
/// No decoder runs here, so stream-state scores are synthesized: a current
/// element scores 1/(1 + D) from its match distance D (0 when unmatched),
/// which ranks well-tracked elements first for top-k maintenance.
std::pair<StreamState, FrameReport> run_stream_frame(
    const std::optional<StreamState>& state, const FrameRecord& frame,
    const std::optional<FrameRecord>& prev_frame, const StreamConfig& cfg,
    const NetworkBundle& nets, RngState& rng);

}  // namespace sqdmap
