#include <doctest.h>

#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sqdmap/reference.hpp"
#include "sqdmap/scenario.hpp"
#include "sqdmap/streaming.hpp"
#include "test_util.hpp"

using namespace sqdmap;
using testutil::random_element;

namespace {

StreamConfig small_stream_config() {
  StreamConfig cfg;
  cfg.n_points = 8;
  return cfg;
}

NetworkBundle small_bundle(int n_points, std::uint64_t seed = 3) {
  EmbeddingConfig ecfg;
  ecfg.dim = 32;
  ecfg.n_points = n_points;
  return NetworkBundle::seeded(ecfg, seed);
}

std::vector<MapElement> random_frame(int count, int n_points, RngState& rng) {
  std::vector<MapElement> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(random_element(static_cast<int>(rng.uniform_below(3)),
                                 n_points, 10.0, rng));
  }
  return out;
}

}  // namespace

TEST_CASE("select_top_k matches a sort-based oracle, stable on ties") {
  const std::vector<double> scores{0.9, 0.1, 0.5};
  const auto top2 = select_top_k(scores, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0] == 0);
  CHECK(top2[1] == 2);

  RngState rng(51);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(10);
    for (double& v : s) v = rng.uniform(0.0, 1.0);
    if (trial % 3 == 0) {
      s[2] = s[7];  // inject a tie
    }
    const std::size_t k = 1 + rng.uniform_below(10);
    const auto got = select_top_k(s, k);

    std::vector<std::size_t> oracle(s.size());
    std::iota(oracle.begin(), oracle.end(), 0);
    std::sort(oracle.begin(), oracle.end(), [&](std::size_t a, std::size_t b) {
      if (s[a] != s[b]) return s[a] > s[b];
      return a < b;  // ties by index
    });
    oracle.resize(std::min(k, oracle.size()));
    CHECK(got == oracle);
  }
}

TEST_CASE("propagate_queries: zero-weight residual net is the identity") {
  const int dim = 16;
  RngState rng(52);
  StreamState state;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> values(dim);
    for (double& v : values) v = rng.uniform(-1.0, 1.0);
    state.queries.push_back(QueryEmbedding{values});
    state.scores.push_back(rng.uniform(0.0, 1.0));
    state.ref_points.push_back(testutil::jagged_polyline(6, 10.0, rng));
  }
  const DenseNetworkSpec zero_phi = DenseNetworkSpec::zero(dim + 9, dim);
  const StreamState out =
      propagate_queries(state, SE2Transform::identity(), zero_phi, 10);
  REQUIRE(out.queries.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    // top-k reorders by score; find the original entry.
    bool found = false;
    for (std::size_t j = 0; j < 3; ++j) {
      if (out.scores[i] == state.scores[j] &&
          out.queries[i].values == state.queries[j].values) {
        found = true;
        // Identity transform leaves the reference polyline in place.
        for (std::size_t p = 0; p < out.ref_points[i].size(); ++p) {
          CHECK(out.ref_points[i][p].x == state.ref_points[j][p].x);
          CHECK(out.ref_points[i][p].y == state.ref_points[j][p].y);
        }
      }
    }
    CHECK(found);
  }
}

TEST_CASE("propagate_queries: top-k selection and reference warping") {
  const int dim = 16;
  RngState rng(53);
  StreamState state;
  const std::vector<double> scores{0.9, 0.1, 0.5};
  for (int i = 0; i < 3; ++i) {
    std::vector<double> values(dim, static_cast<double>(i));
    state.queries.push_back(QueryEmbedding{values});
    state.scores.push_back(scores[static_cast<std::size_t>(i)]);
    state.ref_points.push_back(testutil::jagged_polyline(6, 10.0, rng));
  }
  const SE2Transform t(0.3, {2.0, -1.0});
  const DenseNetworkSpec phi =
      DenseNetworkSpec::seeded({dim + 9, dim}, Activation::kIdentity, rng);
  const StreamState out = propagate_queries(state, t, phi, 2);
  REQUIRE(out.queries.size() == 2);
  CHECK(out.scores[0] == 0.9);
  CHECK(out.scores[1] == 0.5);

  // The reference path is exactly the shared transform path.
  const Polyline expected0 = apply_se2(t, state.ref_points[0]);
  for (std::size_t p = 0; p < expected0.size(); ++p) {
    CHECK(out.ref_points[0][p].x == expected0[p].x);
    CHECK(out.ref_points[0][p].y == expected0[p].y);
  }

  // Residual form: phi(concat(q, flat)) + q.
  std::vector<double> input = state.queries[0].values;
  const auto flat = t.matrix_row_major();
  input.insert(input.end(), flat.begin(), flat.end());
  std::vector<double> expected_q = phi.forward(input);
  for (std::size_t d = 0; d < expected_q.size(); ++d) {
    expected_q[d] += state.queries[0].values[d];
  }
  CHECK(out.queries[0].values == expected_q);

  CHECK_THROWS_AS(
      propagate_queries(state, t, DenseNetworkSpec::zero(dim + 8, dim), 2),
      std::invalid_argument);
}

TEST_CASE("assemble_dn_batch: group arithmetic") {
  RngState rng(54);
  StreamConfig cfg = small_stream_config();

  const auto gt3 = random_frame(3, cfg.n_points, rng);
  RngState batch_rng(1);
  const DnBatch batch = assemble_dn_batch(gt3, {}, {}, cfg, batch_rng);
  CHECK(batch.groups == 20);
  CHECK(batch.group_size == 3);
  CHECK(batch.samples.size() == 60);
  CHECK(batch.target_indices.size() == 60);

  // More elements than budget: a single group.
  const auto gt70 = random_frame(70, cfg.n_points, rng);
  RngState batch_rng2(2);
  const DnBatch big = assemble_dn_batch(gt70, {}, {}, cfg, batch_rng2);
  CHECK(big.groups == 1);
  CHECK(big.samples.size() == 70);

  // No previous frame: every sample is Normal with decay 1.
  for (const NoisySample& s : batch.samples) {
    CHECK(s.source == SampleSource::kNormal);
    CHECK(s.decay == 1.0);
  }

  // Empty current GT: empty batch, no error.
  RngState batch_rng3(3);
  const DnBatch empty = assemble_dn_batch({}, {}, {}, cfg, batch_rng3);
  CHECK(empty.samples.empty());
  CHECK(empty.groups == 0);
}

TEST_CASE("assemble_dn_batch: stream samples carry decay from their match") {
  RngState rng(55);
  StreamConfig cfg = small_stream_config();
  std::vector<MapElement> current = random_frame(4, cfg.n_points, rng);

  // Previous elements: nudged copies of the first two current elements.
  std::vector<MapElement> prev;
  for (int i = 0; i < 2; ++i) {
    std::vector<Point2> nudged = current[static_cast<std::size_t>(i)].points.points();
    for (Point2& p : nudged) p.x += 0.02;
    prev.push_back(MapElement{current[static_cast<std::size_t>(i)].cls,
                              Polyline(std::move(nudged))});
  }
  const auto matches = adaptive_temporal_match(prev, current, cfg.match);

  RngState batch_rng(9);
  const DnBatch batch = assemble_dn_batch(current, prev, matches, cfg, batch_rng);
  REQUIRE(batch.group_size == 4);
  for (std::size_t s = 0; s < batch.samples.size(); ++s) {
    const NoisySample& sample = batch.samples[s];
    const int target = sample.original_index;
    CHECK(target == batch.target_indices[s]);
    const MatchResult& m = matches[static_cast<std::size_t>(target)];
    if (m.matched) {
      CHECK(sample.source == SampleSource::kStream);
      const double expected = decay_rate(m.distance, m.threshold,
                                         cfg.match.alpha, cfg.noise.gamma);
      CHECK(sample.decay == doctest::Approx(expected).epsilon(1e-12));
      CHECK(sample.decay > 0.5);  // alpha/gamma defaults keep matched decay high
    } else {
      CHECK(sample.source == SampleSource::kNormal);
      CHECK(sample.decay == 1.0);
    }
  }
}

TEST_CASE("build_denoise_queries: parallel equals serial reference") {
  RngState rng(56);
  StreamConfig cfg = small_stream_config();
  const auto gt = random_frame(5, cfg.n_points, rng);
  RngState batch_rng(4);
  const DnBatch batch = assemble_dn_batch(gt, {}, {}, cfg, batch_rng);
  const NetworkBundle nets = small_bundle(cfg.n_points);

  const auto parallel = build_denoise_queries(batch, nets);
  const auto serial = reference::build_denoise_queries(batch, nets);
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < parallel.size(); ++i) {
    CHECK(parallel[i].values == serial[i].values);
  }
}

TEST_CASE("run_stream_frame: identical static frames match everywhere") {
  RngState world_rng(57);
  StreamConfig cfg = small_stream_config();
  FrameRecord frame;
  frame.elements = random_frame(5, cfg.n_points, world_rng);
  frame.timestamp = 0.0;

  FrameRecord next = frame;
  next.timestamp = 0.5;

  const NetworkBundle nets = small_bundle(cfg.n_points);
  RngState rng(58);
  auto [state0, report0] = run_stream_frame(std::nullopt, frame, std::nullopt,
                                            cfg, nets, rng);
  CHECK(report0.frame_index == 0);
  CHECK(report0.matched_count == 0);
  CHECK(report0.num_prev_warped == 0);
  for (const SampleRecord& s : report0.samples) {
    CHECK(s.source == SampleSource::kNormal);
    CHECK(s.decay == 1.0);
  }

  auto [state1, report1] =
      run_stream_frame(state0, next, frame, cfg, nets, rng);
  CHECK(report1.frame_index == 1);
  CHECK(report1.num_prev_warped == report1.num_current);
  CHECK(report1.matched_count == report1.num_current);
  CHECK(report1.mean_distance == 0.0);
  CHECK(report1.mean_decay == 1.0);
  CHECK(report1.propagated_count == static_cast<int>(state0.queries.size()));
  for (const SampleRecord& s : report1.samples) {
    CHECK(s.source == SampleSource::kStream);
    CHECK(s.decay == 1.0);
  }
}

TEST_CASE("run_stream_frame: state alignment and budget invariants") {
  StreamConfig cfg = small_stream_config();
  cfg.top_k = 3;
  RngState world_rng(59);
  FrameRecord frame;
  frame.elements = random_frame(6, cfg.n_points, world_rng);

  const NetworkBundle nets = small_bundle(cfg.n_points);
  RngState rng(60);
  auto [state, report] =
      run_stream_frame(std::nullopt, frame, std::nullopt, cfg, nets, rng);
  CHECK(state.queries.size() == state.scores.size());
  CHECK(state.queries.size() == state.ref_points.size());
  CHECK(state.queries.size() <= static_cast<std::size_t>(cfg.top_k));
  CHECK(static_cast<int>(report.samples.size()) ==
        report.groups * report.group_size);
  CHECK(static_cast<int>(report.samples.size()) <=
        cfg.dn_query_budget + report.group_size - 1);
}

TEST_CASE("run_stream_frame: empty current frame yields an empty batch") {
  StreamConfig cfg = small_stream_config();
  RngState world_rng(61);
  FrameRecord prev;
  prev.elements = random_frame(4, cfg.n_points, world_rng);
  FrameRecord empty;
  empty.ego_pose = SE2Transform(0.0, {100.0, 0.0});  // far from everything
  empty.timestamp = 0.5;

  const NetworkBundle nets = small_bundle(cfg.n_points);
  RngState rng(62);
  auto [state0, report0] =
      run_stream_frame(std::nullopt, prev, std::nullopt, cfg, nets, rng);
  auto [state1, report1] = run_stream_frame(state0, empty, prev, cfg, nets, rng);
  CHECK(report1.num_current == 0);
  CHECK(report1.groups == 0);
  CHECK(report1.samples.empty());
  CHECK(state1.queries.empty());
}

TEST_CASE("run_stream_frame: deterministic under a fixed seed") {
  StreamConfig cfg = small_stream_config();
  ScenarioConfig scfg;
  scfg.num_frames = 4;
  scfg.n_points = cfg.n_points;
  scfg.seed = 17;
  const auto frames = generate_scenario(scfg);
  const NetworkBundle nets = small_bundle(cfg.n_points);

  auto run = [&] {
    RngState rng(7);
    std::vector<FrameReport> reports;
    std::optional<StreamState> state;
    std::optional<FrameRecord> prev;
    for (const FrameRecord& frame : frames) {
      auto [next, report] = run_stream_frame(state, frame, prev, cfg, nets, rng);
      reports.push_back(std::move(report));
      state = std::move(next);
      prev = frame;
    }
    return reports;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].matched_count == b[f].matched_count);
    CHECK(a[f].mean_distance == b[f].mean_distance);
    CHECK(a[f].mean_decay == b[f].mean_decay);
    REQUIRE(a[f].samples.size() == b[f].samples.size());
    for (std::size_t s = 0; s < a[f].samples.size(); ++s) {
      CHECK(a[f].samples[s].noise.dx == b[f].samples[s].noise.dx);
      CHECK(a[f].samples[s].decay == b[f].samples[s].decay);
      CHECK(a[f].samples[s].query_norm == b[f].samples[s].query_norm);
      CHECK(a[f].samples[s].cls == b[f].samples[s].cls);
    }
  }
}

TEST_CASE("stream config validation") {
  StreamConfig bad;
  bad.top_k = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  StreamConfig bad2;
  bad2.dn_query_budget = 0;
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
  CHECK_NOTHROW(StreamConfig{}.validate());
}
