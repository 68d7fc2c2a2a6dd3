#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sqdmap/matching.hpp"
#include "sqdmap/scenario.hpp"
#include "test_util.hpp"

using namespace sqdmap;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("generate_world: density counts and determinism") {
  ScenarioConfig cfg;
  cfg.seed = 7;

  RngState rng_a(cfg.seed);
  const WorldMap a = generate_world(cfg, rng_a);
  RngState rng_b(cfg.seed);
  const WorldMap b = generate_world(cfg, rng_b);
  REQUIRE(a.elements.size() == b.elements.size());
  for (std::size_t i = 0; i < a.elements.size(); ++i) {
    CHECK(a.elements[i].cls == b.elements[i].cls);
    REQUIRE(a.elements[i].points.size() == b.elements[i].points.size());
    for (std::size_t p = 0; p < a.elements[i].points.size(); ++p) {
      CHECK(a.elements[i].points[p].x == b.elements[i].points[p].x);
    }
  }

  int dividers = 0, boundaries = 0, crossings = 0;
  for (const MapElement& el : a.elements) {
    if (el.cls == kClassLaneDivider) ++dividers;
    if (el.cls == kClassRoadBoundary) ++boundaries;
    if (el.cls == kClassPedCrossing) ++crossings;
  }
  CHECK(dividers == static_cast<int>(std::ceil(cfg.divider_density * a.extent)));
  CHECK(boundaries ==
        static_cast<int>(std::ceil(cfg.boundary_density * a.extent)));
  CHECK(crossings ==
        static_cast<int>(std::ceil(cfg.ped_crossing_density * a.extent)));

  ScenarioConfig empty_cfg;
  empty_cfg.ped_crossing_density = 0.0;
  empty_cfg.divider_density = 0.0;
  empty_cfg.boundary_density = 0.0;
  RngState rng_c(1);
  CHECK(generate_world(empty_cfg, rng_c).elements.empty());
}

TEST_CASE("frame_ground_truth: clipping and resampling behavior") {
  WorldMap world;
  // One divider along x straddling the forward boundary, one far away.
  world.elements.push_back(
      {kClassLaneDivider, Polyline({{10.0, 0.0}, {50.0, 0.0}})});
  world.elements.push_back(
      {kClassLaneDivider, Polyline({{200.0, 0.0}, {240.0, 0.0}})});
  world.extent = 250.0;

  const PerceptionRange range{30.0, 15.0};
  const auto gt =
      frame_ground_truth(world, SE2Transform::identity(), range, 20);
  REQUIRE(gt.size() == 1);  // the far element is excluded
  CHECK(gt[0].points.size() == 20);
  CHECK(gt[0].points.front().x == doctest::Approx(10.0));
  CHECK(gt[0].points.back().x == 30.0);  // clipped exactly at the boundary
}

TEST_CASE("frame_ground_truth: consecutive poses reproduce curve growth") {
  WorldMap world;
  world.elements.push_back(
      {kClassRoadBoundary, Polyline({{-100.0, 7.0}, {100.0, 7.0}})});
  world.extent = 200.0;
  const PerceptionRange range{30.0, 15.0};

  const SE2Transform pose_a = SE2Transform::identity();
  const SE2Transform pose_b(0.0, {1.0, 0.0});
  const auto gt_a = frame_ground_truth(world, pose_a, range, 20);
  const auto gt_b = frame_ground_truth(world, pose_b, range, 20);
  REQUIRE(gt_a.size() == 1);
  REQUIRE(gt_b.size() == 1);
  // Both frames see a full-range slice; in ego coordinates the slice spans
  // [-30, 30] both times, but it is a different piece of the world curve.
  CHECK(gt_a[0].points.front().x == doctest::Approx(-30.0));
  CHECK(gt_a[0].points.back().x == doctest::Approx(30.0));
  CHECK(gt_b[0].points.front().x == doctest::Approx(-30.0));
  CHECK(gt_b[0].points.back().x == doctest::Approx(30.0));
  // World x of the trailing edge moved forward by the ego motion.
  const Point2 world_back_a = pose_a.apply(gt_a[0].points.back());
  const Point2 world_back_b = pose_b.apply(gt_b[0].points.back());
  CHECK(world_back_b.x - world_back_a.x == doctest::Approx(1.0));
}

TEST_CASE("generate_scenario: kinematics and static worlds") {
  ScenarioConfig cfg;
  cfg.num_frames = 1;
  CHECK(generate_scenario(cfg).size() == 1);

  ScenarioConfig still;
  still.num_frames = 5;
  still.speed = 0.0;
  still.yaw_rate = 0.0;
  still.seed = 3;
  const auto frames = generate_scenario(still);
  REQUIRE(frames.size() == 5);
  for (std::size_t f = 1; f < frames.size(); ++f) {
    REQUIRE(frames[f].elements.size() == frames[0].elements.size());
    for (std::size_t e = 0; e < frames[f].elements.size(); ++e) {
      for (std::size_t p = 0; p < frames[f].elements[e].points.size(); ++p) {
        CHECK(frames[f].elements[e].points[p].x ==
              frames[0].elements[e].points[p].x);
        CHECK(frames[f].elements[e].points[p].y ==
              frames[0].elements[e].points[p].y);
      }
    }
  }

  ScenarioConfig moving;
  moving.num_frames = 4;
  moving.speed = 10.0;
  moving.frame_interval = 0.5;
  const auto fast = generate_scenario(moving);
  for (std::size_t f = 1; f < fast.size(); ++f) {
    const double dx = fast[f].ego_pose.translation().x -
                      fast[f - 1].ego_pose.translation().x;
    CHECK(dx == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("static scenario: every element matches with zero distance") {
  ScenarioConfig cfg;
  cfg.num_frames = 3;
  cfg.speed = 0.0;
  cfg.seed = 11;
  const auto frames = generate_scenario(cfg);
  REQUIRE(frames.size() == 3);
  REQUIRE(!frames[0].elements.empty());

  const SE2Transform t =
      relative_transform(frames[0].ego_pose, frames[1].ego_pose);
  const auto [warped, sources] =
      warp_and_clip_previous(frames[0].elements, t, cfg.range, cfg.n_points);
  const auto results =
      adaptive_temporal_match(warped, frames[1].elements, MatchParams{});
  for (const MatchResult& r : results) {
    CHECK(r.matched);
    CHECK(r.distance == 0.0);
  }
}

TEST_CASE("forward scenario: boundary truncation yields positive distances") {
  ScenarioConfig cfg;
  cfg.num_frames = 6;
  cfg.speed = 5.0;
  cfg.seed = 13;
  cfg.boundary_density = 0.05;
  const auto frames = generate_scenario(cfg);

  int frames_with_positive_d = 0;
  for (std::size_t f = 1; f < frames.size(); ++f) {
    const SE2Transform t =
        relative_transform(frames[f - 1].ego_pose, frames[f].ego_pose);
    const auto [warped, sources] = warp_and_clip_previous(
        frames[f - 1].elements, t, cfg.range, cfg.n_points);
    const auto results =
        adaptive_temporal_match(warped, frames[f].elements, MatchParams{});
    bool any_positive = false;
    for (const MatchResult& r : results) {
      // Well above FP noise: only genuine truncation/growth shifts count.
      if (r.matched && r.distance > 1e-6) any_positive = true;
    }
    if (any_positive) ++frames_with_positive_d;
  }
  CHECK(frames_with_positive_d == static_cast<int>(frames.size()) - 1);
}

TEST_CASE("scenario serialization round trip") {
  ScenarioConfig cfg;
  cfg.num_frames = 20;
  cfg.seed = 5;
  const auto frames = generate_scenario(cfg);
  const auto path = temp_file("sqdmap_scenario_test.txt");
  write_scenario(frames, path.string());
  const auto loaded = read_scenario(path.string());
  REQUIRE(loaded.size() == frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    CHECK(loaded[f].timestamp == doctest::Approx(frames[f].timestamp));
    CHECK(loaded[f].ego_pose.translation().x ==
          doctest::Approx(frames[f].ego_pose.translation().x).epsilon(1e-12));
    CHECK(loaded[f].ego_pose.rotation() ==
          doctest::Approx(frames[f].ego_pose.rotation()).epsilon(1e-12));
    REQUIRE(loaded[f].elements.size() == frames[f].elements.size());
    for (std::size_t e = 0; e < frames[f].elements.size(); ++e) {
      CHECK(loaded[f].elements[e].cls == frames[f].elements[e].cls);
      REQUIRE(loaded[f].elements[e].points.size() ==
              frames[f].elements[e].points.size());
      for (std::size_t p = 0; p < frames[f].elements[e].points.size(); ++p) {
        CHECK(std::abs(loaded[f].elements[e].points[p].x -
                       frames[f].elements[e].points[p].x) < 1e-9);
        CHECK(std::abs(loaded[f].elements[e].points[p].y -
                       frames[f].elements[e].points[p].y) < 1e-9);
      }
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("scenario parsing: empty file and malformed records") {
  const auto path = temp_file("sqdmap_scenario_bad.txt");
  {
    std::ofstream out(path);
  }
  CHECK(read_scenario(path.string()).empty());

  {
    std::ofstream out(path);
    out << "0 0.0 0.0 0.0 0.0 1 2 5 0 0 1 1\n";  // promises 5 points, gives 2
  }
  CHECK_THROWS_WITH_AS(read_scenario(path.string()),
                       doctest::Contains("line 1"), std::runtime_error);

  {
    std::ofstream out(path);
    out << "0 0.0 0.0 junk\n";
  }
  CHECK_THROWS_AS(read_scenario(path.string()), std::runtime_error);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(read_scenario("/nonexistent/scenario.txt"),
                  std::runtime_error);
}

TEST_CASE("prediction files round trip") {
  RngState rng(19);
  std::vector<std::vector<ScoredPrediction>> preds(2);
  for (int f = 0; f < 2; ++f) {
    for (int i = 0; i < 3; ++i) {
      preds[f].push_back(
          {testutil::random_element(i % 3, 6, 10.0, rng), rng.uniform(0.0, 1.0)});
    }
  }
  const auto path = temp_file("sqdmap_preds_test.txt");
  write_predictions(preds, path.string());
  const auto loaded = read_predictions(path.string());
  REQUIRE(loaded.size() == 2);
  for (std::size_t f = 0; f < 2; ++f) {
    REQUIRE(loaded[f].size() == preds[f].size());
    for (std::size_t i = 0; i < preds[f].size(); ++i) {
      CHECK(loaded[f][i].element.cls == preds[f][i].element.cls);
      CHECK(loaded[f][i].score == doctest::Approx(preds[f][i].score).epsilon(1e-12));
    }
  }
  std::filesystem::remove(path);
}

TEST_CASE("match report round trip") {
  std::vector<MatchReportFrame> reports(1);
  reports[0].frame_index = 3;
  reports[0].num_prev_warped = 2;
  MatchResult matched;
  matched.current_index = 0;
  matched.prev_index = 1;
  matched.distance = 0.25;
  matched.threshold = 0.5;
  matched.matched = true;
  MatchResult unmatched;
  unmatched.current_index = 1;
  unmatched.distance = std::numeric_limits<double>::infinity();
  unmatched.threshold = 0.4;
  reports[0].matches = {matched, unmatched};

  const auto path = temp_file("sqdmap_match_test.jsonl");
  write_match_reports(reports, path.string());
  const auto loaded = read_match_reports(path.string());
  REQUIRE(loaded.size() == 1);
  REQUIRE(loaded[0].matches.size() == 2);
  CHECK(loaded[0].matches[0].matched);
  CHECK(*loaded[0].matches[0].prev_index == 1);
  CHECK(loaded[0].matches[0].distance == 0.25);
  CHECK_FALSE(loaded[0].matches[1].prev_index.has_value());
  CHECK(std::isinf(loaded[0].matches[1].distance));
  std::filesystem::remove(path);
}
