#pragma once

// Synthetic workload generator. Produces traces whose shuffle-stage I/O
// densities follow a log-normal calibrated so a target fraction lands
// above the SSD/HDD break-even line, whose per-run IOPS scale linearly
// with input size, and whose run durations wobble with cluster load.
//
// Determinism contract: every random draw comes from a substream keyed on
// (seed, role, indices). Quantities that set a file's total I/O depend
// only on (pipeline, config, input), never on the run index, so re-running
// the same work moves its duration but not its op count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "tiersim/econ.hpp"
#include "tiersim/rng.hpp"
#include "tiersim/trace.hpp"

namespace tiersim {

struct CountRange {
  std::uint32_t min = 1;
  std::uint32_t max = 1;
  bool operator==(const CountRange&) const = default;
};

// Discrete power law on [min, max]: count = min * u^(-1/alpha), clamped.
// Small alpha -> heavier tail.
struct ParetoCountDist {
  std::uint32_t min = 1;
  std::uint32_t max = 1;
  double alpha = 1.0;
  bool operator==(const ParetoCountDist&) const = default;
};

struct LogNormalSpec {
  double median = 1.0;
  double sigma = 0.0;
  bool operator==(const LogNormalSpec&) const = default;
};

struct ByteRange {
  std::uint64_t min_bytes = 1;
  std::uint64_t max_bytes = 1;
  bool operator==(const ByteRange&) const = default;
};

struct InputIopsScaling {
  double slope = 1e-8;       // average IOPS per input byte
  double noise_sigma = 0.0;  // relative (log-scale) noise on IOPS and density
  bool operator==(const InputIopsScaling&) const = default;
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  std::uint32_t num_pipelines = 20;
  std::uint32_t runs_per_pipeline = 10;
  ParetoCountDist configs_per_pipeline_dist{1, 200, 0.5};
  CountRange stages_per_pipeline{4, 10};
  double shuffle_fraction = 0.5;   // of intermediate stages
  CountRange files_per_stage{1, 6};
  LogNormalSpec base_density_dist{40.0, 1.5};  // median applies to non-shuffle stages
  double target_above_crossover_fraction = 0.7;
  ByteRange input_bytes_dist{1'000'000'000, 1'000'000'000'000};  // log-uniform
  InputIopsScaling iops_per_input_byte{1e-8, 0.0};
  double env_stretch_max = 1.0;    // worst-case slowdown under full contention
  double diurnal_amplitude = 0.0;  // 0 = flat cluster load, 1 = full day/night swing
  bool operator==(const GeneratorConfig&) const = default;
};

inline void validate(const GeneratorConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw validation_error("generator config: " + field + " " + why);
  };
  auto frac = [&](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) fail(field, "must be in [0, 1]");
  };
  if (c.num_pipelines == 0) fail("num_pipelines", "must be >= 1");
  if (c.runs_per_pipeline == 0) fail("runs_per_pipeline", "must be >= 1");
  if (c.configs_per_pipeline_dist.min == 0 ||
      c.configs_per_pipeline_dist.min > c.configs_per_pipeline_dist.max)
    fail("configs_per_pipeline_dist", "needs 1 <= min <= max");
  if (!(std::isfinite(c.configs_per_pipeline_dist.alpha) && c.configs_per_pipeline_dist.alpha > 0))
    fail("configs_per_pipeline_dist.alpha", "must be > 0");
  if (c.stages_per_pipeline.min < 3)
    fail("stages_per_pipeline.min", "must be >= 3 (source, intermediate, sink)");
  if (c.stages_per_pipeline.min > c.stages_per_pipeline.max)
    fail("stages_per_pipeline", "needs min <= max");
  if (c.stages_per_pipeline.max > 64)
    fail("stages_per_pipeline.max", "must be <= 64 (keeps per-layer windows at least a second)");
  frac(c.shuffle_fraction, "shuffle_fraction");
  if (c.files_per_stage.min == 0 || c.files_per_stage.min > c.files_per_stage.max)
    fail("files_per_stage", "needs 1 <= min <= max");
  if (!(std::isfinite(c.base_density_dist.median) && c.base_density_dist.median > 0))
    fail("base_density_dist.median", "must be > 0");
  if (!(std::isfinite(c.base_density_dist.sigma) && c.base_density_dist.sigma >= 0))
    fail("base_density_dist.sigma", "must be >= 0");
  frac(c.target_above_crossover_fraction, "target_above_crossover_fraction");
  if (c.input_bytes_dist.min_bytes == 0 ||
      c.input_bytes_dist.min_bytes > c.input_bytes_dist.max_bytes)
    fail("input_bytes_dist", "needs 1 <= min_bytes <= max_bytes");
  if (!(std::isfinite(c.iops_per_input_byte.slope) && c.iops_per_input_byte.slope > 0))
    fail("iops_per_input_byte.slope", "must be > 0");
  if (!(std::isfinite(c.iops_per_input_byte.noise_sigma) && c.iops_per_input_byte.noise_sigma >= 0))
    fail("iops_per_input_byte.noise_sigma", "must be >= 0");
  if (!(std::isfinite(c.env_stretch_max) && c.env_stretch_max >= 1.0))
    fail("env_stretch_max", "must be >= 1");
  frac(c.diurnal_amplitude, "diurnal_amplitude");
}

// Cluster contention over time. Runs launched at busy hours stretch more:
// stretch = 1 + (stretch_max - 1) * u with u in [0, 1] mixing an
// arcsine-dispersed per-run draw with a 24h sinusoidal load curve.
struct EnvModel {
  double stretch_max = 1.0;
  double diurnal_amplitude = 0.0;

  double load01(double t_s) const {
    return 0.5 + 0.5 * diurnal_amplitude * std::sin(2.0 * std::numbers::pi * t_s / 86400.0);
  }

  double draw_contention(double t_s, Rng& rng) const {
    // arcsine law pushes mass toward calm and saturated extremes
    const double v = 0.5 - 0.5 * std::cos(std::numbers::pi * rng.uniform01());
    const double u = (1.0 - diurnal_amplitude) * v + diurnal_amplitude * load01(t_s);
    return std::clamp(u, 0.0, 1.0);
  }

  double stretch_for(double contention01) const {
    return 1.0 + (stretch_max - 1.0) * contention01;
  }
};

namespace gendetail {

inline std::string idstr(const char* prefix, std::uint32_t n) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%s%03u", prefix, n);
  return buf;
}

inline double normal_for_key(std::uint64_t key) {
  Rng r(key);
  return r.normal();
}

inline std::uint32_t pareto_count(const ParetoCountDist& d, Rng& rng) {
  if (d.min == d.max) return d.min;
  const double u = 1.0 - rng.uniform01();  // (0, 1]
  const double raw = d.min * std::pow(u, -1.0 / d.alpha);
  const double capped = std::min<double>(raw, d.max);
  return static_cast<std::uint32_t>(std::max<double>(d.min, std::floor(capped)));
}

struct StagePlan {
  StageSpec spec;
  std::uint32_t layer = 0;
  std::uint32_t files = 0;         // files per instance, fixed per stage
  double density_median = 0.0;     // per-stage base, before config/run effects
};

struct PipelinePlan {
  PipelineSpec spec;
  std::vector<StagePlan> stages;       // same order as spec.stages
  std::vector<std::string> configs;
  std::uint32_t n_layers = 0;
  std::uint32_t n_intermediate = 0;
  double base_duration_s = 0.0;
};

}  // namespace gendetail

// Deterministic for a fixed config (seed included); the returned trace
// always passes validate().
inline Trace generate(const GeneratorConfig& cfg) {
  validate(cfg);

  const double crossover_ref = crossover_density(CostModel{});
  const double sigma_base = cfg.base_density_dist.sigma;
  const double sigma_noise = cfg.iops_per_input_byte.noise_sigma;
  // Base spread splits into a per-stage and a per-config share; per-run
  // noise rides on top. Calibration targets the resulting total spread.
  const double sigma_stage = sigma_base * std::sqrt(0.7);
  const double sigma_config = sigma_base * std::sqrt(0.3);
  const double sigma_total = std::hypot(sigma_base, sigma_noise);
  const double q =
      std::clamp(cfg.target_above_crossover_fraction, 1e-4, 1.0 - 1e-4);
  const double shuffle_median =
      sigma_total > 0.0 ? crossover_ref * std::exp(sigma_total * inv_normal_cdf(q))
                        : crossover_ref * (q >= 0.5 ? 2.0 : 0.5);

  const EnvModel env{cfg.env_stretch_max, cfg.diurnal_amplitude};
  const double horizon_s = 10.0 * 86400.0;

  Trace out;
  std::uint64_t next_run_id = 0;
  std::uint64_t next_file_id = 0;

  std::vector<gendetail::PipelinePlan> plans;
  plans.reserve(cfg.num_pipelines);

  for (std::uint32_t pi = 0; pi < cfg.num_pipelines; ++pi) {
    gendetail::PipelinePlan plan;
    plan.spec.pipeline_id = gendetail::idstr("p", pi);
    Rng rs(hash_mix(hash_str(cfg.seed, "structure"), pi));

    const auto n_stages = static_cast<std::uint32_t>(
        rs.uniform_int(cfg.stages_per_pipeline.min, cfg.stages_per_pipeline.max));
    const std::uint32_t n_mid = n_stages - 2;

    // Layered DAG: single source, middle stages in layers of 1-3, single sink.
    std::vector<std::uint32_t> layer_of(n_stages, 0);
    std::uint32_t layer = 0;
    std::uint32_t room = 0;
    for (std::uint32_t s = 1; s <= n_mid; ++s) {
      if (room == 0) {
        ++layer;
        room = static_cast<std::uint32_t>(rs.uniform_int(1, 3));
      }
      layer_of[s] = layer;
      --room;
    }
    const std::uint32_t sink_layer = layer + 1;
    layer_of[n_stages - 1] = sink_layer;
    plan.n_layers = sink_layer + 1;

    std::vector<std::vector<std::uint32_t>> by_layer(plan.n_layers);
    for (std::uint32_t s = 0; s < n_stages; ++s) by_layer[layer_of[s]].push_back(s);

    for (std::uint32_t s = 0; s < n_stages; ++s) {
      gendetail::StagePlan sp;
      sp.spec.stage_id = gendetail::idstr("s", s);
      sp.layer = layer_of[s];
      if (s == 0) {
        sp.spec.kind = StageKind::source;
      } else if (s == n_stages - 1) {
        sp.spec.kind = StageKind::sink;
      } else if (rs.uniform01() < cfg.shuffle_fraction) {
        sp.spec.kind = StageKind::shuffle;
      } else {
        sp.spec.kind = rs.uniform01() < 0.5 ? StageKind::map : StageKind::reduce;
      }
      sp.spec.depth = sp.layer;
      plan.stages.push_back(std::move(sp));
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t li = 1; li < plan.n_layers; ++li) {
      for (std::uint32_t s : by_layer[li]) {
        const auto& prev = by_layer[li - 1];
        const auto want = static_cast<std::uint32_t>(
            rs.uniform_int(1, std::min<std::uint64_t>(3, prev.size())));
        std::vector<std::uint32_t> picks(prev);
        for (std::uint32_t k = 0; k < want; ++k) {
          const auto j = static_cast<std::size_t>(rs.uniform_int(k, picks.size() - 1));
          std::swap(picks[k], picks[j]);
          edges.emplace_back(picks[k], s);
        }
      }
    }
    // every non-sink stage must feed something downstream
    std::vector<std::uint32_t> out_deg(n_stages, 0);
    for (const auto& [from, to] : edges) {
      (void)to;
      ++out_deg[from];
    }
    for (std::uint32_t li = 0; li + 1 < plan.n_layers; ++li) {
      for (std::uint32_t s : by_layer[li]) {
        if (out_deg[s] != 0) continue;
        const auto& next = by_layer[li + 1];
        const auto j = static_cast<std::size_t>(rs.uniform_int(0, next.size() - 1));
        edges.emplace_back(s, next[j]);
        ++out_deg[s];
      }
    }

    std::sort(edges.begin(), edges.end());
    std::vector<std::uint32_t> fan_in(n_stages, 0), fan_out(n_stages, 0);
    for (const auto& [from, to] : edges) {
      ++fan_out[from];
      ++fan_in[to];
      plan.spec.edges.emplace_back(plan.stages[from].spec.stage_id,
                                   plan.stages[to].spec.stage_id);
    }
    for (std::uint32_t s = 0; s < n_stages; ++s) {
      plan.stages[s].spec.fan_in = fan_in[s];
      plan.stages[s].spec.fan_out = fan_out[s];
    }

    const std::uint32_t n_configs = gendetail::pareto_count(cfg.configs_per_pipeline_dist, rs);
    plan.configs.reserve(n_configs);
    for (std::uint32_t ci = 0; ci < n_configs; ++ci)
      plan.configs.push_back(gendetail::idstr("c", ci));

    plan.base_duration_s = std::exp(rs.uniform(std::log(1800.0), std::log(14400.0)));

    for (auto& sp : plan.stages) {
      const bool mid = sp.spec.kind != StageKind::source && sp.spec.kind != StageKind::sink;
      if (!mid) continue;
      ++plan.n_intermediate;
      sp.files = static_cast<std::uint32_t>(
          rs.uniform_int(cfg.files_per_stage.min, cfg.files_per_stage.max));
      const double median =
          sp.spec.kind == StageKind::shuffle ? shuffle_median : cfg.base_density_dist.median;
      sp.density_median = median * std::exp(sigma_stage * rs.normal());
    }

    for (const auto& sp : plan.stages) plan.spec.stages.push_back(sp.spec);
    out.pipelines.push_back(plan.spec);
    plans.push_back(std::move(plan));
  }

  const double ln_in_min = std::log(static_cast<double>(cfg.input_bytes_dist.min_bytes));
  const double ln_in_max = std::log(static_cast<double>(cfg.input_bytes_dist.max_bytes));

  for (std::uint32_t pi = 0; pi < cfg.num_pipelines; ++pi) {
    const auto& plan = plans[pi];
    for (std::uint32_t ri = 0; ri < cfg.runs_per_pipeline; ++ri) {
      Rng rr(hash_mix(hash_mix(hash_str(cfg.seed, "run"), pi), ri));

      // round-robin over configs: every variant of a busy pipeline shows up
      const std::string& config_id = plan.configs[ri % plan.configs.size()];
      const std::uint64_t config_key = hash_str(hash_mix(cfg.seed, pi), config_id);

      std::uint64_t input_bytes = cfg.input_bytes_dist.min_bytes;
      if (cfg.input_bytes_dist.min_bytes != cfg.input_bytes_dist.max_bytes) {
        const double ln_v = rr.uniform(ln_in_min, ln_in_max);
        input_bytes = std::clamp<std::uint64_t>(
            static_cast<std::uint64_t>(std::llround(std::exp(ln_v))),
            cfg.input_bytes_dist.min_bytes, cfg.input_bytes_dist.max_bytes);
      }

      // whole-second event times: lifetimes then subtract exactly, so
      // identical work observes bit-identical avg IOPS wherever it starts
      const double start_s = std::floor(rr.uniform(0.0, horizon_s));
      const double contention = env.draw_contention(start_s, rr);
      const double stretch = env.stretch_for(contention);
      const double load_factor = stretch - 1.0;  // expected_stretch() inverts this
      const int priority = static_cast<int>(rr.uniform_int(0, 3));

      const double duration_s = std::max(1.0, std::round(plan.base_duration_s * stretch));

      RunMeta run;
      run.run_id = next_run_id++;
      run.pipeline_id = plan.spec.pipeline_id;
      run.config_id = config_id;
      run.input_bytes = input_bytes;
      run.priority = priority;
      run.load_factor = load_factor;
      run.start_s = start_s;
      run.end_s = start_s + duration_s;
      out.runs.push_back(run);

      const double layer_base_s = plan.base_duration_s / plan.n_layers;

      for (std::uint32_t si = 0; si < plan.stages.size(); ++si) {
        const auto& sp = plan.stages[si];
        if (sp.files == 0) continue;  // source/sink stages write no temp data

        // everything feeding total_ops is keyed on (pipeline, stage,
        // config, input) so identical work is identical I/O
        std::uint64_t k = hash_str(cfg.seed, "stagedraw");
        k = hash_mix(k, pi);
        k = hash_mix(k, si);
        k = hash_mix(k, config_key);
        k = hash_mix(k, input_bytes);
        Rng kh(k);
        const double iops_noise = std::exp(sigma_noise * kh.normal());
        const double density_noise = std::exp(sigma_noise * kh.normal());

        const double iops_base = cfg.iops_per_input_byte.slope *
                                 static_cast<double>(input_bytes) * iops_noise /
                                 plan.n_intermediate;
        const auto total_ops = static_cast<std::uint64_t>(
            std::max<long long>(0, std::llround(iops_base * layer_base_s)));

        const double config_mult =
            std::exp(sigma_config * gendetail::normal_for_key(hash_mix(config_key, si)));
        const double density = sp.density_median * config_mult * density_noise;

        const double realized_iops = static_cast<double>(total_ops) / layer_base_s;
        const auto agg_bytes = std::max<std::uint64_t>(
            sp.files,
            static_cast<std::uint64_t>(std::llround(kBytesPerTb * realized_iops / density)));

        const double win_start = start_s + std::round(duration_s * sp.layer / plan.n_layers);
        const double win_end = start_s + std::round(duration_s * (sp.layer + 1) / plan.n_layers);

        const std::uint64_t ops_q = total_ops / sp.files;
        const std::uint64_t ops_r = total_ops % sp.files;
        const std::uint64_t bytes_q = agg_bytes / sp.files;
        const std::uint64_t bytes_r = agg_bytes % sp.files;
        for (std::uint32_t fi = 0; fi < sp.files; ++fi) {
          TempFileRecord f;
          f.file_id = next_file_id++;
          f.run_id = run.run_id;
          f.stage_id = sp.spec.stage_id;
          f.created_s = win_start;
          f.deleted_s = win_end;
          f.size_bytes = bytes_q + (fi < bytes_r ? 1 : 0);
          f.total_ops = ops_q + (fi < ops_r ? 1 : 0);
          f.is_shuffle = sp.spec.kind == StageKind::shuffle;
          out.files.push_back(std::move(f));
        }
      }
    }
  }

  return out;
}

// Distinct config variants actually exercised per pipeline.
inline std::map<std::string, std::size_t> config_histogram(const Trace& t) {
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& r : t.runs) seen[r.pipeline_id].insert(r.config_id);
  std::map<std::string, std::size_t> out;
  for (const auto& [pid, cfgs] : seen) out[pid] = cfgs.size();
  return out;
}

struct ScatterPoint {
  std::uint64_t run_id = 0;
  std::string stage_id;
  double size_tb = 0.0;    // summed over the stage instance's files
  double avg_iops = 0.0;   // summed lifetime-average IOPS
  double density() const { return avg_iops / size_tb; }
};

// One point per shuffle-stage instance: total bytes vs total IOPS.
inline std::vector<ScatterPoint> density_scatter(const Trace& t) {
  std::map<std::pair<std::uint64_t, std::string>, ScatterPoint> agg;
  for (const auto& f : t.files) {
    if (!f.is_shuffle) continue;
    auto& pt = agg[{f.run_id, f.stage_id}];
    pt.run_id = f.run_id;
    pt.stage_id = f.stage_id;
    pt.size_tb += size_tb(f.size_bytes);
    pt.avg_iops += avg_iops(f);
  }
  std::vector<ScatterPoint> out;
  out.reserve(agg.size());
  for (auto& [key, pt] : agg) out.push_back(std::move(pt));
  return out;
}

inline ojson to_json(const GeneratorConfig& c) {
  return ojson{
      {"seed", c.seed},
      {"num_pipelines", c.num_pipelines},
      {"runs_per_pipeline", c.runs_per_pipeline},
      {"configs_per_pipeline_dist",
       {{"min", c.configs_per_pipeline_dist.min},
        {"max", c.configs_per_pipeline_dist.max},
        {"alpha", c.configs_per_pipeline_dist.alpha}}},
      {"stages_per_pipeline", {{"min", c.stages_per_pipeline.min}, {"max", c.stages_per_pipeline.max}}},
      {"shuffle_fraction", c.shuffle_fraction},
      {"files_per_stage", {{"min", c.files_per_stage.min}, {"max", c.files_per_stage.max}}},
      {"base_density_dist",
       {{"median", c.base_density_dist.median}, {"sigma", c.base_density_dist.sigma}}},
      {"target_above_crossover_fraction", c.target_above_crossover_fraction},
      {"input_bytes_dist",
       {{"min_bytes", c.input_bytes_dist.min_bytes}, {"max_bytes", c.input_bytes_dist.max_bytes}}},
      {"iops_per_input_byte",
       {{"slope", c.iops_per_input_byte.slope},
        {"noise_sigma", c.iops_per_input_byte.noise_sigma}}},
      {"env_stretch_max", c.env_stretch_max},
      {"diurnal_amplitude", c.diurnal_amplitude}};
}

inline GeneratorConfig generator_config_from_json(const ojson& j) {
  GeneratorConfig c;
  auto opt = [&](const char* name) { return j.contains(name); };
  if (opt("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (opt("num_pipelines")) c.num_pipelines = j.at("num_pipelines").get<std::uint32_t>();
  if (opt("runs_per_pipeline")) c.runs_per_pipeline = j.at("runs_per_pipeline").get<std::uint32_t>();
  if (opt("configs_per_pipeline_dist")) {
    const auto& d = j.at("configs_per_pipeline_dist");
    c.configs_per_pipeline_dist = {d.at("min").get<std::uint32_t>(),
                                   d.at("max").get<std::uint32_t>(),
                                   d.at("alpha").get<double>()};
  }
  if (opt("stages_per_pipeline")) {
    const auto& d = j.at("stages_per_pipeline");
    c.stages_per_pipeline = {d.at("min").get<std::uint32_t>(), d.at("max").get<std::uint32_t>()};
  }
  if (opt("shuffle_fraction")) c.shuffle_fraction = j.at("shuffle_fraction").get<double>();
  if (opt("files_per_stage")) {
    const auto& d = j.at("files_per_stage");
    c.files_per_stage = {d.at("min").get<std::uint32_t>(), d.at("max").get<std::uint32_t>()};
  }
  if (opt("base_density_dist")) {
    const auto& d = j.at("base_density_dist");
    c.base_density_dist = {d.at("median").get<double>(), d.at("sigma").get<double>()};
  }
  if (opt("target_above_crossover_fraction"))
    c.target_above_crossover_fraction = j.at("target_above_crossover_fraction").get<double>();
  if (opt("input_bytes_dist")) {
    const auto& d = j.at("input_bytes_dist");
    c.input_bytes_dist = {d.at("min_bytes").get<std::uint64_t>(),
                          d.at("max_bytes").get<std::uint64_t>()};
  }
  if (opt("iops_per_input_byte")) {
    const auto& d = j.at("iops_per_input_byte");
    c.iops_per_input_byte = {d.at("slope").get<double>(), d.at("noise_sigma").get<double>()};
  }
  if (opt("env_stretch_max")) c.env_stretch_max = j.at("env_stretch_max").get<double>();
  if (opt("diurnal_amplitude")) c.diurnal_amplitude = j.at("diurnal_amplitude").get<double>();
  validate(c);
  return c;
}

inline GeneratorConfig load_generator_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
  try {
    return generator_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
}

}  // namespace tiersim
