#include "sqdmap/cli_commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sqdmap/embedding.hpp"
#include "sqdmap/matching.hpp"
#include "sqdmap/metrics.hpp"
#include "sqdmap/noising.hpp"
#include "sqdmap/scenario.hpp"
#include "sqdmap/streaming.hpp"
#include "sqdmap/svg_render.hpp"

namespace sqdmap::cli {

namespace {

using nlohmann::json;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SQDMAP_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

struct NoiseFlags {
  double lambda = 0.6;
  double lambda1 = -1.0, lambda2 = -1.0, lambda3 = -1.0, lambda4 = -1.0;
  double flip_prob = 0.5;
  double gamma = 0.2;

  void attach(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "max noise scale for all four components");
    cmd->add_option("--lambda1", lambda1, "max x-shift scale (overrides --lambda)");
    cmd->add_option("--lambda2", lambda2, "max y-shift scale (overrides --lambda)");
    cmd->add_option("--lambda3", lambda3, "max height scale (overrides --lambda)");
    cmd->add_option("--lambda4", lambda4, "max width scale (overrides --lambda)");
    cmd->add_option("--flip-prob", flip_prob, "label flip probability");
    cmd->add_option("--gamma", gamma, "noise decay scale");
  }
  NoiseParams params() const {
    auto pick = [&](double v) { return v >= 0.0 ? v : lambda; };
    return NoiseParams{pick(lambda1), pick(lambda2), pick(lambda3),
                       pick(lambda4), flip_prob, gamma};
  }
};

struct RangeFlags {
  double half_length = 30.0;
  double half_width = 15.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--half-length", half_length, "perception half length (m)");
    cmd->add_option("--half-width", half_width, "perception half width (m)");
  }
  PerceptionRange range() const { return {half_length, half_width}; }
};

int cmd_gen_scenario(CLI::App& app) {
  auto* cmd = app.add_subcommand("gen-scenario", "generate a synthetic scenario");
  auto cfg = std::make_shared<ScenarioConfig>();
  auto out = std::make_shared<std::string>();
  auto range = std::make_shared<RangeFlags>();
  auto seed = std::make_shared<std::uint64_t>(default_seed());
  cmd->add_option("--out", *out, "output scenario file")->required();
  cmd->add_option("--frames", cfg->num_frames, "number of frames");
  cmd->add_option("--interval", cfg->frame_interval, "frame interval (s)");
  cmd->add_option("--speed", cfg->speed, "ego speed (m/s)");
  cmd->add_option("--yaw-rate", cfg->yaw_rate, "ego yaw rate (rad/s)");
  cmd->add_option("--ped-density", cfg->ped_crossing_density,
                  "pedestrian crossings per meter");
  cmd->add_option("--divider-density", cfg->divider_density,
                  "lane dividers per meter");
  cmd->add_option("--boundary-density", cfg->boundary_density,
                  "road boundaries per meter");
  cmd->add_option("--n-points", cfg->n_points, "points per element");
  cmd->add_option("--seed", *seed, "random seed");
  range->attach(cmd);
  cmd->callback([cfg, out, range, seed] {
    cfg->range = range->range();
    cfg->seed = *seed;
    const std::vector<FrameRecord> frames = generate_scenario(*cfg);
    write_scenario(frames, *out);
    std::size_t total = 0;
    for (const auto& f : frames) total += f.elements.size();
    std::cout << "wrote " << frames.size() << " frames (" << total
              << " elements) to " << *out << "\n";
  });
  return 0;
}

StreamConfig stream_config_from(const NoiseFlags& noise, const RangeFlags& range,
                                double alpha, int budget, int top_k,
                                int n_points, int num_classes) {
  StreamConfig cfg;
  cfg.top_k = top_k;
  cfg.dn_query_budget = budget;
  cfg.n_points = n_points;
  cfg.num_classes = num_classes;
  cfg.range = range.range();
  cfg.noise = noise.params();
  cfg.match = MatchParams{alpha};
  return cfg;
}

int cmd_sqd_run(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "sqd-run", "run the stream query denoising pipeline over a scenario");
  auto scenario = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto noise = std::make_shared<NoiseFlags>();
  auto range = std::make_shared<RangeFlags>();
  auto alpha = std::make_shared<double>(0.1);
  auto budget = std::make_shared<int>(60);
  auto top_k = std::make_shared<int>(20);
  auto n_points = std::make_shared<int>(20);
  auto dim = std::make_shared<int>(256);
  auto seed = std::make_shared<std::uint64_t>(default_seed());
  cmd->add_option("--scenario", *scenario, "input scenario file")->required();
  cmd->add_option("--out", *out, "output frame-report file (JSONL)")->required();
  cmd->add_option("--alpha", *alpha, "matching tolerance degree");
  cmd->add_option("--budget", *budget, "denoising query budget");
  cmd->add_option("--top-k", *top_k, "stream state size");
  cmd->add_option("--n-points", *n_points, "points per element");
  cmd->add_option("--dim", *dim, "query embedding dimension");
  cmd->add_option("--seed", *seed, "random seed");
  noise->attach(cmd);
  range->attach(cmd);
  cmd->callback([=] {
    const std::vector<FrameRecord> frames = read_scenario(*scenario);
    const StreamConfig cfg = stream_config_from(*noise, *range, *alpha, *budget,
                                                *top_k, *n_points, 3);
    EmbeddingConfig ecfg;
    ecfg.dim = *dim;
    ecfg.n_points = cfg.n_points;
    ecfg.num_classes = cfg.num_classes;
    ecfg.coord_normalizer = cfg.range;

    RngState root(*seed);
    const NetworkBundle nets = NetworkBundle::seeded(ecfg, root.next_u64());
    RngState rng = root.split();

    std::vector<FrameReport> reports;
    std::optional<StreamState> state;
    std::optional<FrameRecord> prev;
    for (const FrameRecord& frame : frames) {
      auto [next_state, report] =
          run_stream_frame(state, frame, prev, cfg, nets, rng);
      reports.push_back(std::move(report));
      state = std::move(next_state);
      prev = frame;
    }
    write_frame_reports(reports, *out);

    std::size_t matched = 0, current = 0;
    for (const auto& r : reports) {
      matched += static_cast<std::size_t>(r.matched_count);
      current += static_cast<std::size_t>(r.num_current);
    }
    std::cout << "processed " << reports.size() << " frames, matched "
              << matched << "/" << current << " elements; reports in " << *out
              << "\n";
  });
  return 0;
}

int cmd_match(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "match", "adaptive temporal matching between consecutive frames");
  auto scenario = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto alpha = std::make_shared<double>(0.1);
  auto n_points = std::make_shared<int>(20);
  auto frame = std::make_shared<int>(-1);
  auto range = std::make_shared<RangeFlags>();
  cmd->add_option("--scenario", *scenario, "input scenario file")->required();
  cmd->add_option("--out", *out, "output match-report file (JSONL)")->required();
  cmd->add_option("--alpha", *alpha, "matching tolerance degree");
  cmd->add_option("--n-points", *n_points, "points per element");
  cmd->add_option("--frame", *frame,
                  "match only this frame against its predecessor");
  range->attach(cmd);
  cmd->callback([=] {
    const std::vector<FrameRecord> frames = read_scenario(*scenario);
    const MatchParams params{*alpha};
    std::vector<MatchReportFrame> reports;
    const int first = *frame >= 0 ? *frame : 1;
    const int last = *frame >= 0 ? *frame : static_cast<int>(frames.size()) - 1;
    if (first < 1 || last >= static_cast<int>(frames.size())) {
      throw std::runtime_error("frame index out of range (needs a predecessor)");
    }
    for (int i = first; i <= last; ++i) {
      const SE2Transform T =
          relative_transform(frames[i - 1].ego_pose, frames[i].ego_pose);
      const auto [warped, sources] = warp_and_clip_previous(
          frames[i - 1].elements, T, range->range(), *n_points);
      MatchReportFrame r;
      r.frame_index = i;
      r.num_prev_warped = static_cast<int>(warped.size());
      r.matches = adaptive_temporal_match(warped, frames[i].elements, params);
      reports.push_back(std::move(r));
    }
    write_match_reports(reports, *out);
    std::cout << "wrote " << reports.size() << " match records to " << *out
              << "\n";
  });
  return 0;
}

int cmd_noise(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "noise", "dump noisy denoising samples for scenario ground truth");
  auto scenario = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto match_report = std::make_shared<std::string>();
  auto noise = std::make_shared<NoiseFlags>();
  auto alpha = std::make_shared<double>(0.1);
  auto groups = std::make_shared<int>(1);
  auto seed = std::make_shared<std::uint64_t>(default_seed());
  cmd->add_option("--scenario", *scenario, "input scenario file")->required();
  cmd->add_option("--out", *out, "output noisy-sample file (JSONL)")->required();
  cmd->add_option("--match-report", *match_report,
                  "match report supplying per-element decay");
  cmd->add_option("--alpha", *alpha, "matching tolerance degree for decay");
  cmd->add_option("--groups", *groups, "noisy samples per element");
  cmd->add_option("--seed", *seed, "random seed");
  noise->attach(cmd);
  cmd->callback([=] {
    const std::vector<FrameRecord> frames = read_scenario(*scenario);
    std::vector<MatchReportFrame> match_frames;
    if (!match_report->empty()) {
      match_frames = read_match_reports(*match_report);
    }
    auto decay_for = [&](std::size_t frame_idx, std::size_t element_idx) {
      for (const MatchReportFrame& mf : match_frames) {
        if (mf.frame_index != static_cast<int>(frame_idx)) continue;
        if (element_idx < mf.matches.size() &&
            mf.matches[element_idx].matched) {
          const MatchResult& m = mf.matches[element_idx];
          return decay_rate(m.distance, m.threshold, *alpha, noise->gamma);
        }
      }
      return 1.0;
    };

    RngState rng(*seed);
    const NoiseParams params = noise->params();
    std::ofstream os(*out);
    if (!os) throw std::runtime_error("cannot open for writing: " + *out);
    std::size_t total = 0;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      json samples = json::array();
      for (int g = 0; g < *groups; ++g) {
        for (std::size_t e = 0; e < frames[f].elements.size(); ++e) {
          const double decay = decay_for(f, e);
          const NoisySample sample = make_noisy_instance(
              frames[f].elements[e], static_cast<int>(e),
              SampleSource::kNormal, decay, params, 3, rng);
          json pts = json::array();
          for (const Point2& p : sample.element.points.points()) {
            pts.push_back({p.x, p.y});
          }
          samples.push_back(
              json{{"target_index", sample.original_index},
                   {"cls", sample.element.cls},
                   {"decay", sample.decay},
                   {"noise",
                    {sample.noise.dx, sample.noise.dy, sample.noise.dw,
                     sample.noise.dh}},
                   {"points", std::move(pts)}});
          ++total;
        }
      }
      os << json{{"frame_index", f}, {"samples", std::move(samples)}}.dump()
         << '\n';
    }
    std::cout << "wrote " << total << " noisy samples to " << *out << "\n";
  });
  return 0;
}

int cmd_eval_ap(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "eval-ap", "Chamfer-threshold AP evaluation of predictions against GT");
  auto scenario = std::make_shared<std::string>();
  auto preds = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto thresholds = std::make_shared<std::vector<double>>();
  auto range = std::make_shared<RangeFlags>();
  cmd->add_option("--scenario", *scenario, "scenario file with ground truth")
      ->required();
  cmd->add_option("--preds", *preds, "prediction file")->required();
  cmd->add_option("--out", *out, "output evaluation report (JSONL)");
  cmd->add_option("--thresholds", *thresholds,
                  "AP thresholds in meters (default 0.5 1.0 1.5)");
  range->attach(cmd);
  cmd->callback([=] {
    const std::vector<FrameRecord> frames = read_scenario(*scenario);
    const auto preds_per_frame = read_predictions(*preds);
    if (preds_per_frame.size() != frames.size()) {
      throw std::runtime_error("prediction file has " +
                               std::to_string(preds_per_frame.size()) +
                               " frames, scenario has " +
                               std::to_string(frames.size()));
    }
    EvalConfig cfg;
    if (!thresholds->empty()) cfg.thresholds = *thresholds;
    cfg.range = range->range();
    std::vector<std::vector<MapElement>> gts;
    gts.reserve(frames.size());
    for (const FrameRecord& f : frames) gts.push_back(f.elements);
    const EvalReport report = evaluate_frames(preds_per_frame, gts, cfg);
    std::cout << format_eval_table(report, cfg);
    if (!out->empty()) write_eval_report(report, cfg, *out);
  });
  return 0;
}

int cmd_render_svg(CLI::App& app) {
  auto* cmd = app.add_subcommand(
      "render-svg", "render frames (GT, warped previous GT, matches, samples)");
  auto scenario = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>();
  auto noise = std::make_shared<NoiseFlags>();
  auto range = std::make_shared<RangeFlags>();
  auto alpha = std::make_shared<double>(0.1);
  auto budget = std::make_shared<int>(60);
  auto n_points = std::make_shared<int>(20);
  auto max_frames = std::make_shared<int>(-1);
  auto no_samples = std::make_shared<bool>(false);
  auto seed = std::make_shared<std::uint64_t>(default_seed());
  cmd->add_option("--scenario", *scenario, "input scenario file")->required();
  cmd->add_option("--out-dir", *out_dir, "output directory")->required();
  cmd->add_option("--alpha", *alpha, "matching tolerance degree");
  cmd->add_option("--budget", *budget, "denoising query budget");
  cmd->add_option("--n-points", *n_points, "points per element");
  cmd->add_option("--max-frames", *max_frames, "render at most this many frames");
  cmd->add_flag("--no-samples", *no_samples, "omit noised samples");
  cmd->add_option("--seed", *seed, "random seed");
  noise->attach(cmd);
  range->attach(cmd);
  cmd->callback([=] {
    const std::vector<FrameRecord> frames = read_scenario(*scenario);
    const StreamConfig cfg =
        stream_config_from(*noise, *range, *alpha, *budget, 20, *n_points, 3);
    std::filesystem::create_directories(*out_dir);
    RngState rng(*seed);
    RenderOptions options;
    options.draw_samples = !*no_samples;
    std::size_t count = frames.size();
    if (*max_frames >= 0) {
      count = std::min<std::size_t>(count, static_cast<std::size_t>(*max_frames));
    }
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<MapElement> warped;
      if (i > 0) {
        const SE2Transform T = relative_transform(frames[i - 1].ego_pose,
                                                  frames[i].ego_pose);
        warped = warp_and_clip_previous(frames[i - 1].elements, T, cfg.range,
                                        cfg.n_points)
                     .first;
      }
      const std::vector<MatchResult> matches =
          adaptive_temporal_match(warped, frames[i].elements, cfg.match);
      const DnBatch batch =
          assemble_dn_batch(frames[i].elements, warped, matches, cfg, rng);
      const std::string svg = render_frame_svg(
          frames[i], warped, matches, batch.samples, cfg.range, options);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%03zu.svg", i);
      const std::filesystem::path path = std::filesystem::path(*out_dir) / name;
      std::ofstream os(path);
      if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
      os << svg;
      if (!os) throw std::runtime_error("failed writing: " + path.string());
    }
    std::cout << "rendered " << count << " frames into " << *out_dir << "\n";
  });
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sqdmap");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"stream query denoising data pipeline for vectorized HD maps"};
  app.require_subcommand(1);
  cmd_gen_scenario(app);
  cmd_sqd_run(app);
  cmd_match(app);
  cmd_noise(app);
  cmd_eval_ap(app);
  cmd_render_svg(app);

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage error
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;  // input error
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace sqdmap::cli
