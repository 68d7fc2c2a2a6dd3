#include "sqdmap/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sqdmap {

using nlohmann::json;

void ScenarioConfig::validate() const {
  if (num_frames < 1) throw std::invalid_argument("num_frames must be >= 1");
  if (!(frame_interval > 0.0)) {
    throw std::invalid_argument("frame_interval must be positive");
  }
  if (speed < 0.0) throw std::invalid_argument("speed must be non-negative");
  if (n_points < 2) throw std::invalid_argument("n_points must be >= 2");
  if (ped_crossing_density < 0.0 || divider_density < 0.0 ||
      boundary_density < 0.0) {
    throw std::invalid_argument("densities must be non-negative");
  }
  range.validate();
}

WorldMap generate_world(const ScenarioConfig& cfg, RngState& rng) {
  cfg.validate();
  const double travel =
      cfg.speed * cfg.frame_interval * static_cast<double>(cfg.num_frames - 1);
  const double x0 = -cfg.range.half_length - 10.0;
  const double length = travel + 2.0 * cfg.range.half_length + 20.0;
  const double road_half = std::min(7.0, 0.8 * cfg.range.half_width);

  WorldMap world;
  world.extent = length;

  auto count_for = [&](double density) {
    return static_cast<int>(std::ceil(density * length));
  };

  // Road boundaries: long, gently curved edges, alternating sides.
  const int num_boundaries = count_for(cfg.boundary_density);
  for (int i = 0; i < num_boundaries; ++i) {
    const double side = (i % 2 == 0) ? 1.0 : -1.0;
    const double len = rng.uniform(30.0, 60.0);
    const double start = x0 + rng.uniform(0.0, std::max(1.0, length - len));
    const double phase = rng.uniform(0.0, 6.28);
    std::vector<Point2> pts;
    for (double x = start; x <= start + len; x += 2.0) {
      pts.push_back({x, side * road_half + 0.6 * std::sin(0.05 * x + phase)});
    }
    if (pts.size() >= 2) {
      world.elements.push_back(
          {kClassRoadBoundary, Polyline(std::move(pts))});
    }
  }

  // Lane dividers: straight longitudinal segments on one of three lane lines.
  const int num_dividers = count_for(cfg.divider_density);
  const double lane_offsets[3] = {-road_half / 2.0, 0.0, road_half / 2.0};
  for (int i = 0; i < num_dividers; ++i) {
    const double len = rng.uniform(8.0, 25.0);
    const double start = x0 + rng.uniform(0.0, std::max(1.0, length - len));
    const double y = lane_offsets[rng.uniform_below(3)];
    world.elements.push_back(
        {kClassLaneDivider,
         Polyline({{start, y}, {start + len, y}})});
  }

  // Pedestrian crossings: closed rectangles spanning the road.
  const int num_crossings = count_for(cfg.ped_crossing_density);
  for (int i = 0; i < num_crossings; ++i) {
    const double width = rng.uniform(3.0, 5.0);
    const double cx = x0 + rng.uniform(width, std::max(width + 1.0, length - width));
    const double x1 = cx - width / 2.0;
    const double x2 = cx + width / 2.0;
    const double y1 = -road_half;
    const double y2 = road_half;
    world.elements.push_back(
        {kClassPedCrossing,
         Polyline({{x1, y1}, {x2, y1}, {x2, y2}, {x1, y2}, {x1, y1}})});
  }
  return world;
}

std::vector<MapElement> frame_ground_truth(const WorldMap& world,
                                           const SE2Transform& pose,
                                           const PerceptionRange& range,
                                           int n_points) {
  const SE2Transform world_to_ego = pose.inverse();
  std::vector<MapElement> out;
  for (const MapElement& el : world.elements) {
    const Polyline ego_poly = apply_se2(world_to_ego, el.points);
    std::optional<Polyline> clipped = clip_to_range(ego_poly, range);
    if (!clipped) continue;
    out.push_back({el.cls, resample_polyline(*clipped, n_points)});
  }
  return out;
}

std::vector<FrameRecord> generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  RngState rng(cfg.seed);
  const WorldMap world = generate_world(cfg, rng);

  std::vector<SE2Transform> poses;
  poses.reserve(static_cast<std::size_t>(cfg.num_frames));
  SE2Transform pose;  // start at the world origin, heading +x
  poses.push_back(pose);
  const double dt = cfg.frame_interval;
  for (int i = 1; i < cfg.num_frames; ++i) {
    const double dtheta = cfg.yaw_rate * dt;
    Point2 local;
    if (std::abs(cfg.yaw_rate) < 1e-12) {
      local = {cfg.speed * dt, 0.0};
    } else {
      const double radius = cfg.speed / cfg.yaw_rate;
      local = {radius * std::sin(dtheta), radius * (1.0 - std::cos(dtheta))};
    }
    pose = pose.compose(SE2Transform(dtheta, local));
    poses.push_back(pose);
  }

  std::vector<FrameRecord> frames(static_cast<std::size_t>(cfg.num_frames));
  const std::int64_t n = cfg.num_frames;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    frames[i].ego_pose = poses[i];
    frames[i].timestamp = static_cast<double>(i) * dt;
    frames[i].elements =
        frame_ground_truth(world, poses[i], cfg.range, cfg.n_points);
  }
  return frames;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path + ": parse error at line " +
                           std::to_string(line) + ": " + what);
}

}  // namespace

void write_scenario(const std::vector<FrameRecord>& frames,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# idx timestamp ego_x ego_y ego_yaw n_elements"
         " { cls n_points x y ... }\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FrameRecord& f = frames[i];
    out << i << ' ' << fmt(f.timestamp) << ' ' << fmt(f.ego_pose.translation().x)
        << ' ' << fmt(f.ego_pose.translation().y) << ' '
        << fmt(f.ego_pose.rotation()) << ' ' << f.elements.size();
    for (const MapElement& el : f.elements) {
      out << ' ' << el.cls << ' ' << el.points.size();
      for (const Point2& p : el.points.points()) {
        out << ' ' << fmt(p.x) << ' ' << fmt(p.y);
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing: " + path);
}

std::vector<FrameRecord> read_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<FrameRecord> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::size_t idx;
    double ts, ex, ey, yaw;
    std::size_t n_elements;
    if (!(ss >> idx >> ts >> ex >> ey >> yaw >> n_elements)) {
      parse_fail(path, line_no, "bad frame header");
    }
    FrameRecord frame;
    frame.timestamp = ts;
    frame.ego_pose = SE2Transform(yaw, {ex, ey});
    for (std::size_t e = 0; e < n_elements; ++e) {
      int cls;
      std::size_t n_pts;
      if (!(ss >> cls >> n_pts)) parse_fail(path, line_no, "bad element header");
      if (n_pts < 2) parse_fail(path, line_no, "element with fewer than 2 points");
      std::vector<Point2> pts(n_pts);
      for (std::size_t p = 0; p < n_pts; ++p) {
        if (!(ss >> pts[p].x >> pts[p].y)) {
          parse_fail(path, line_no, "truncated point list");
        }
      }
      try {
        frame.elements.push_back({cls, Polyline(std::move(pts))});
      } catch (const std::invalid_argument& err) {
        parse_fail(path, line_no, err.what());
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_predictions(
    const std::vector<std::vector<ScoredPrediction>>& preds_per_frame,
    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# idx n_predictions { cls score n_points x y ... }\n";
  for (std::size_t i = 0; i < preds_per_frame.size(); ++i) {
    out << i << ' ' << preds_per_frame[i].size();
    for (const ScoredPrediction& p : preds_per_frame[i]) {
      out << ' ' << p.element.cls << ' ' << fmt(p.score) << ' '
          << p.element.points.size();
      for (const Point2& pt : p.element.points.points()) {
        out << ' ' << fmt(pt.x) << ' ' << fmt(pt.y);
      }
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing: " + path);
}

std::vector<std::vector<ScoredPrediction>> read_predictions(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<ScoredPrediction>> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::size_t idx, n_preds;
    if (!(ss >> idx >> n_preds)) parse_fail(path, line_no, "bad frame header");
    std::vector<ScoredPrediction> preds;
    for (std::size_t e = 0; e < n_preds; ++e) {
      int cls;
      double score;
      std::size_t n_pts;
      if (!(ss >> cls >> score >> n_pts)) {
        parse_fail(path, line_no, "bad prediction header");
      }
      std::vector<Point2> pts(n_pts);
      for (std::size_t p = 0; p < n_pts; ++p) {
        if (!(ss >> pts[p].x >> pts[p].y)) {
          parse_fail(path, line_no, "truncated point list");
        }
      }
      try {
        preds.push_back({MapElement{cls, Polyline(std::move(pts))}, score});
      } catch (const std::invalid_argument& err) {
        parse_fail(path, line_no, err.what());
      }
    }
    frames.push_back(std::move(preds));
  }
  return frames;
}

namespace {

json match_to_json(const MatchResult& m) {
  json j;
  j["current_index"] = m.current_index;
  if (m.prev_index) {
    j["prev_index"] = *m.prev_index;
    j["distance"] = m.distance;
  } else {
    j["prev_index"] = nullptr;  // explicit no-match state, no infinities
  }
  j["threshold"] = m.threshold;
  j["matched"] = m.matched;
  return j;
}

MatchResult match_from_json(const json& j) {
  MatchResult m;
  m.current_index = j.at("current_index").get<int>();
  if (!j.at("prev_index").is_null()) {
    m.prev_index = j.at("prev_index").get<int>();
    m.distance = j.at("distance").get<double>();
  } else {
    m.distance = std::numeric_limits<double>::infinity();
  }
  m.threshold = j.at("threshold").get<double>();
  m.matched = j.at("matched").get<bool>();
  return m;
}

json sample_to_json(const SampleRecord& s) {
  return json{{"target_index", s.target_index},
              {"source", s.source == SampleSource::kStream ? "stream" : "normal"},
              {"cls", s.cls},
              {"noise", {s.noise.dx, s.noise.dy, s.noise.dw, s.noise.dh}},
              {"decay", s.decay},
              {"query_norm", s.query_norm}};
}

SampleRecord sample_from_json(const json& j) {
  SampleRecord s;
  s.target_index = j.at("target_index").get<int>();
  s.source = j.at("source").get<std::string>() == "stream"
                 ? SampleSource::kStream
                 : SampleSource::kNormal;
  s.cls = j.at("cls").get<int>();
  const auto& n = j.at("noise");
  s.noise = NoiseVector{n.at(0).get<double>(), n.at(1).get<double>(),
                        n.at(2).get<double>(), n.at(3).get<double>()};
  s.decay = j.at("decay").get<double>();
  s.query_norm = j.at("query_norm").get<double>();
  return s;
}

}  // namespace

void write_frame_reports(const std::vector<FrameReport>& reports,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const FrameReport& r : reports) {
    json j;
    j["frame_index"] = r.frame_index;
    j["timestamp"] = r.timestamp;
    j["num_current"] = r.num_current;
    j["num_prev_warped"] = r.num_prev_warped;
    j["matched_count"] = r.matched_count;
    j["mean_distance"] = r.mean_distance;
    j["mean_decay"] = r.mean_decay;
    j["groups"] = r.groups;
    j["group_size"] = r.group_size;
    j["propagated_count"] = r.propagated_count;
    json matches = json::array();
    for (const MatchResult& m : r.matches) matches.push_back(match_to_json(m));
    j["matches"] = std::move(matches);
    json samples = json::array();
    for (const SampleRecord& s : r.samples) samples.push_back(sample_to_json(s));
    j["samples"] = std::move(samples);
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing: " + path);
}

std::vector<FrameReport> read_frame_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<FrameReport> reports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& err) {
      parse_fail(path, line_no, err.what());
    }
    try {
      FrameReport r;
      r.frame_index = j.at("frame_index").get<int>();
      r.timestamp = j.at("timestamp").get<double>();
      r.num_current = j.at("num_current").get<int>();
      r.num_prev_warped = j.at("num_prev_warped").get<int>();
      r.matched_count = j.at("matched_count").get<int>();
      r.mean_distance = j.at("mean_distance").get<double>();
      r.mean_decay = j.at("mean_decay").get<double>();
      r.groups = j.at("groups").get<int>();
      r.group_size = j.at("group_size").get<int>();
      r.propagated_count = j.at("propagated_count").get<int>();
      for (const json& m : j.at("matches")) r.matches.push_back(match_from_json(m));
      for (const json& s : j.at("samples")) r.samples.push_back(sample_from_json(s));
      reports.push_back(std::move(r));
    } catch (const json::exception& err) {
      parse_fail(path, line_no, err.what());
    }
  }
  return reports;
}

void write_match_reports(const std::vector<MatchReportFrame>& reports,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const MatchReportFrame& r : reports) {
    json matches = json::array();
    for (const MatchResult& m : r.matches) matches.push_back(match_to_json(m));
    json j{{"frame_index", r.frame_index},
           {"num_prev_warped", r.num_prev_warped},
           {"matches", std::move(matches)}};
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing: " + path);
}

std::vector<MatchReportFrame> read_match_reports(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<MatchReportFrame> reports;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      MatchReportFrame r;
      r.frame_index = j.at("frame_index").get<int>();
      r.num_prev_warped = j.at("num_prev_warped").get<int>();
      for (const json& m : j.at("matches")) r.matches.push_back(match_from_json(m));
      reports.push_back(std::move(r));
    } catch (const json::exception& err) {
      parse_fail(path, line_no, err.what());
    }
  }
  return reports;
}

void write_eval_report(const EvalReport& report, const EvalConfig& cfg,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const ClassApResult& row : report.per_class) {
    json j;
    j["class"] = row.cls;
    j["thresholds"] = cfg.thresholds;
    j["ap_per_threshold"] = row.ap_per_threshold;
    j["ap"] = row.ap;
    out << j.dump() << '\n';
  }
  out << json{{"map", report.map}}.dump() << '\n';
  if (!out) throw std::runtime_error("failed writing: " + path);
}

}  // namespace sqdmap
