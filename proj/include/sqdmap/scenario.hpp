#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqdmap/geometry.hpp"
#include "sqdmap/metrics.hpp"
#include "sqdmap/rng.hpp"
#include "sqdmap/streaming.hpp"

namespace sqdmap {

inline constexpr int kClassPedCrossing = 0;
inline constexpr int kClassLaneDivider = 1;
inline constexpr int kClassRoadBoundary = 2;

struct ScenarioConfig {
  int num_frames = 20;
  double frame_interval = 0.5;  // seconds (2 Hz)
  double speed = 5.0;           // m/s along the ego heading
  double yaw_rate = 0.0;        // rad/s
  PerceptionRange range{30.0, 15.0};
  // Element counts are ceil(density * corridor length), per class.
  double ped_crossing_density = 0.02;
  double divider_density = 0.05;
  double boundary_density = 0.04;
  int n_points = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Static world-frame map: elements plus the corridor extent they span.
struct WorldMap {
  std::vector<MapElement> elements;
  double extent = 0.0;
};

/// Lays out a driving corridor: gently curved road boundaries, straight lane
/// dividers and rectangular pedestrian crossings. Deterministic per seed.
WorldMap generate_world(const ScenarioConfig& cfg, RngState& rng);

/// World elements seen from `pose`: transformed into the ego frame, clipped
/// to the range, empty survivors dropped, the rest resampled to n_points.
std::vector<MapElement> frame_ground_truth(const WorldMap& world,
                                           const SE2Transform& pose,
                                           const PerceptionRange& range,
                                           int n_points);

/// Integrates the ego trajectory at constant speed / yaw rate and emits one
/// FrameRecord per frame. Deterministic per cfg.seed.
std::vector<FrameRecord> generate_scenario(const ScenarioConfig& cfg);

/// Scenario files: one frame per line,
///   <index> <timestamp> <ego_x> <ego_y> <ego_yaw> <n_elements>
///   then per element: <cls> <n_points> <x1> <y1> ... ;
/// '#' lines are comments. Malformed records raise with the line number.
void write_scenario(const std::vector<FrameRecord>& frames,
                    const std::string& path);
std::vector<FrameRecord> read_scenario(const std::string& path);

/// Prediction files: one frame per line,
///   <index> <n_predictions> then per prediction:
///   <cls> <score> <n_points> <x1> <y1> ...
void write_predictions(
    const std::vector<std::vector<ScoredPrediction>>& preds_per_frame,
    const std::string& path);
std::vector<std::vector<ScoredPrediction>> read_predictions(
    const std::string& path);

/// Frame reports as line-delimited JSON, one record per frame.
void write_frame_reports(const std::vector<FrameReport>& reports,
                         const std::string& path);
std::vector<FrameReport> read_frame_reports(const std::string& path);

/// Match-only reports (one JSON record per frame pair).
struct MatchReportFrame {
  int frame_index = 0;  // current frame of the pair
  int num_prev_warped = 0;
  std::vector<MatchResult> matches;
};
void write_match_reports(const std::vector<MatchReportFrame>& reports,
                         const std::string& path);
std::vector<MatchReportFrame> read_match_reports(const std::string& path);

/// Evaluation report as line-delimited JSON: one record per class, then one
/// summary record carrying the mAP.
void write_eval_report(const EvalReport& report, const EvalConfig& cfg,
                       const std::string& path);

}  // namespace sqdmap
