#pragma once

// Per-creation-site models of temporary-file behavior. Each site keeps a
// linear fit of IOPS and size against run input bytes at three key
// granularities; prediction walks fine -> mid -> coarse -> global until a
// key has enough samples. Features are restricted to what exists when the
// file is created — nothing from the file's own future.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tiersim/econ.hpp"
#include "tiersim/trace.hpp"

namespace tiersim {

enum class Granularity { fine, mid, coarse, global_mean };

inline std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::fine: return "fine";
    case Granularity::mid: return "mid";
    case Granularity::coarse: return "coarse";
    case Granularity::global_mean: return "global";
  }
  return "?";
}

struct FeatureVector {
  std::string pipeline_id;
  std::string config_id;
  std::string stage_id;
  StageKind stage_kind = StageKind::map;
  std::uint32_t fan_in = 0;
  std::uint32_t fan_out = 0;
  std::uint32_t depth = 0;
  bool is_shuffle = false;
  std::uint64_t input_bytes = 0;
  double load_factor = 0.0;
  int priority = 0;
  bool operator==(const FeatureVector&) const = default;
};

// Creation-time context only: run metadata plus the static stage spec.
inline FeatureVector extract_features(const RunMeta& run, const PipelineSpec& pipeline,
                                      std::string_view stage_id) {
  const StageSpec* s = pipeline.find_stage(stage_id);
  if (s == nullptr)
    throw validation_error("stage " + std::string(stage_id) + " not in pipeline " +
                           pipeline.pipeline_id);
  FeatureVector f;
  f.pipeline_id = run.pipeline_id;
  f.config_id = run.config_id;
  f.stage_id = s->stage_id;
  f.stage_kind = s->kind;
  f.fan_in = s->fan_in;
  f.fan_out = s->fan_out;
  f.depth = s->depth;
  f.is_shuffle = s->kind == StageKind::shuffle;
  f.input_bytes = run.input_bytes;
  f.load_factor = run.load_factor;
  f.priority = run.priority;
  return f;
}

// One-pass centered least squares. The centered form y_mean + slope*(x -
// x_mean) reproduces the training mean exactly at x = x_mean, and a key
// fed identical samples predicts them back bit-for-bit.
struct LinearFit {
  std::uint64_t n = 0;
  double x_mean = 0.0;
  double y_mean = 0.0;
  double m2_x = 0.0;   // sum (x - x_mean)^2
  double m2_y = 0.0;
  double c_xy = 0.0;   // sum (x - x_mean)(y - y_mean)

  void add(double x, double y) {
    ++n;
    const double dx = x - x_mean;
    x_mean += dx / static_cast<double>(n);
    m2_x += dx * (x - x_mean);
    const double dy = y - y_mean;
    y_mean += dy / static_cast<double>(n);
    m2_y += dy * (y - y_mean);
    c_xy += dx * (y - y_mean);
  }

  // degenerate inputs (single sample, constant x) fall back to a constant
  double slope() const { return m2_x > 0.0 ? c_xy / m2_x : 0.0; }
  double intercept() const { return y_mean - slope() * x_mean; }
  double at(double x) const { return y_mean + slope() * (x - x_mean); }
  double residual_rms() const {
    if (n == 0) return 0.0;
    const double sse = m2_y - slope() * c_xy;
    return std::sqrt(std::max(0.0, sse) / static_cast<double>(n));
  }
};

struct KeyStats {
  LinearFit iops;          // load-normalized avg IOPS vs input_bytes
  LinearFit size;          // size_bytes vs input_bytes
  double stretch_sum = 0;  // observed contention stretch, for diagnostics

  std::uint64_t n() const { return iops.n; }
  double mean_stretch() const {
    return n() ? stretch_sum / static_cast<double>(n()) : 1.0;
  }
};

struct Prediction {
  double predicted_avg_iops = 0.0;
  double predicted_size_bytes = 0.0;
  double predicted_density = 0.0;  // always iops / (size/1e12) of the two above
  Granularity source_granularity = Granularity::global_mean;
  std::uint64_t confidence = 0;    // sample count behind the estimate
};

struct FineKey {
  std::string pipeline, config, stage;
  auto operator<=>(const FineKey&) const = default;
};

struct MidKey {
  std::string pipeline, stage;
  auto operator<=>(const MidKey&) const = default;
};

class ModelStore {
 public:
  std::uint64_t min_samples = 3;  // smallest history a key needs to be trusted

  std::map<FineKey, KeyStats> fine;
  std::map<MidKey, KeyStats> mid;
  std::map<StageKind, KeyStats> coarse;
  KeyStats global;

  void add_sample(const FeatureVector& f, double observed_avg_iops, double observed_size_bytes) {
    const double stretch = expected_stretch(f.load_factor);
    const double x = static_cast<double>(f.input_bytes);
    const double y_iops = observed_avg_iops * stretch;  // back to calm-cluster rate
    auto feed = [&](KeyStats& ks) {
      ks.iops.add(x, y_iops);
      ks.size.add(x, observed_size_bytes);
      ks.stretch_sum += stretch;
    };
    feed(fine[{f.pipeline_id, f.config_id, f.stage_id}]);
    feed(mid[{f.pipeline_id, f.stage_id}]);
    feed(coarse[f.stage_kind]);
    feed(global);
  }

  Prediction predict(const FeatureVector& f) const {
    Prediction p;
    const double x = static_cast<double>(f.input_bytes);
    double iops_calm = 0.0;
    double size_bytes = 0.0;

    const KeyStats* ks = nullptr;
    if (auto it = fine.find({f.pipeline_id, f.config_id, f.stage_id});
        it != fine.end() && it->second.n() >= min_samples) {
      ks = &it->second;
      p.source_granularity = Granularity::fine;
    } else if (auto im = mid.find({f.pipeline_id, f.stage_id});
               im != mid.end() && im->second.n() >= min_samples) {
      ks = &im->second;
      p.source_granularity = Granularity::mid;
    } else if (auto ic = coarse.find(f.stage_kind);
               ic != coarse.end() && ic->second.n() >= min_samples) {
      ks = &ic->second;
      p.source_granularity = Granularity::coarse;
    }

    if (ks != nullptr) {
      iops_calm = ks->iops.at(x);
      size_bytes = ks->size.at(x);
      // a fit extrapolated far outside its training inputs can go
      // negative; the key's mean is the sane nonnegative answer there
      if (!(iops_calm > 0.0)) iops_calm = ks->iops.y_mean;
      if (!(size_bytes > 0.0)) size_bytes = ks->size.y_mean;
      p.confidence = ks->n();
    } else {
      // last resort: global means, no input scaling
      iops_calm = global.iops.y_mean;
      size_bytes = global.size.y_mean;
      p.source_granularity = Granularity::global_mean;
      p.confidence = global.n();
    }

    size_bytes = std::max(1.0, size_bytes);           // a file occupies at least a byte
    iops_calm = std::max(0.0, iops_calm);
    const double stretch = expected_stretch(f.load_factor);
    p.predicted_avg_iops = iops_calm / stretch;       // contention slows the same ops down
    p.predicted_size_bytes = size_bytes;
    p.predicted_density = p.predicted_avg_iops / (size_bytes / kBytesPerTb);
    return p;
  }
};

inline ModelStore train(const Trace& history) {
  if (history.files.empty()) throw validation_error("train: no files in history");
  std::map<std::uint64_t, const RunMeta*> runs;
  std::map<std::string, const PipelineSpec*> pipelines;
  for (const auto& r : history.runs) runs[r.run_id] = &r;
  for (const auto& p : history.pipelines) pipelines[p.pipeline_id] = &p;

  ModelStore store;
  for (const auto& f : history.files) {
    auto ri = runs.find(f.run_id);
    if (ri == runs.end())
      throw validation_error("train: file " + std::to_string(f.file_id) + ": unknown run");
    const RunMeta& run = *ri->second;
    const FeatureVector feat = extract_features(run, *pipelines.at(run.pipeline_id), f.stage_id);
    store.add_sample(feat, avg_iops(f), static_cast<double>(f.size_bytes));
  }
  return store;
}

struct EvalReport {
  std::uint64_t n_files = 0;
  double density_mape = 0.0;   // mean |pred - actual| / actual, over positive-density files
  double tier_accuracy = 0.0;  // agreement with the cost-optimal tier
  // confusion counts, predicted x actual
  std::uint64_t ssd_ssd = 0, ssd_hdd = 0, hdd_ssd = 0, hdd_hdd = 0;
};

inline EvalReport evaluate(const ModelStore& store, const Trace& test, const CostModel& model) {
  if (test.files.empty()) throw validation_error("evaluate: no files in test trace");
  std::map<std::uint64_t, const RunMeta*> runs;
  std::map<std::string, const PipelineSpec*> pipelines;
  for (const auto& r : test.runs) runs[r.run_id] = &r;
  for (const auto& p : test.pipelines) pipelines[p.pipeline_id] = &p;

  const double crossover = crossover_density(model);
  EvalReport rep;
  double ape_sum = 0.0;
  std::uint64_t ape_n = 0;
  std::uint64_t hits = 0;

  for (const auto& f : test.files) {
    const RunMeta& run = *runs.at(f.run_id);
    const FeatureVector feat = extract_features(run, *pipelines.at(run.pipeline_id), f.stage_id);
    const Prediction pred = store.predict(feat);

    const double actual = io_density(f);
    if (actual > 0.0) {
      ape_sum += std::abs(pred.predicted_density - actual) / actual;
      ++ape_n;
    }
    const Tier predicted = pred.predicted_density > crossover ? Tier::ssd : Tier::hdd;
    const Tier actual_tier = oracle_tier(f, model);
    if (predicted == actual_tier) ++hits;
    if (predicted == Tier::ssd)
      (actual_tier == Tier::ssd ? rep.ssd_ssd : rep.ssd_hdd)++;
    else
      (actual_tier == Tier::ssd ? rep.hdd_ssd : rep.hdd_hdd)++;
  }
  rep.n_files = test.files.size();
  rep.density_mape = ape_n ? ape_sum / static_cast<double>(ape_n) : 0.0;
  rep.tier_accuracy = static_cast<double>(hits) / static_cast<double>(rep.n_files);
  return rep;
}

namespace modeldetail {

inline ojson fit_to_json(const LinearFit& f) {
  return ojson{{"n", f.n},     {"x_mean", f.x_mean}, {"y_mean", f.y_mean},
               {"m2_x", f.m2_x}, {"m2_y", f.m2_y},   {"c_xy", f.c_xy}};
}

inline LinearFit fit_from_json(const ojson& j) {
  LinearFit f;
  f.n = j.at("n").get<std::uint64_t>();
  f.x_mean = j.at("x_mean").get<double>();
  f.y_mean = j.at("y_mean").get<double>();
  f.m2_x = j.at("m2_x").get<double>();
  f.m2_y = j.at("m2_y").get<double>();
  f.c_xy = j.at("c_xy").get<double>();
  return f;
}

inline ojson stats_to_json(const KeyStats& ks) {
  return ojson{{"iops_fit", fit_to_json(ks.iops)},
               {"size_fit", fit_to_json(ks.size)},
               {"stretch_sum", ks.stretch_sum}};
}

inline KeyStats stats_from_json(const ojson& j) {
  KeyStats ks;
  ks.iops = fit_from_json(j.at("iops_fit"));
  ks.size = fit_from_json(j.at("size_fit"));
  ks.stretch_sum = j.at("stretch_sum").get<double>();
  return ks;
}

}  // namespace modeldetail

// Stable JSON: map iteration is ordered, doubles round-trip exactly, so
// save -> load -> save is byte-identical and loaded stores predict
// identically.
inline ojson to_json(const ModelStore& s) {
  ojson fine = ojson::array();
  for (const auto& [k, v] : s.fine)
    fine.push_back(ojson{{"pipeline", k.pipeline},
                         {"config", k.config},
                         {"stage", k.stage},
                         {"stats", modeldetail::stats_to_json(v)}});
  ojson mid = ojson::array();
  for (const auto& [k, v] : s.mid)
    mid.push_back(ojson{{"pipeline", k.pipeline},
                        {"stage", k.stage},
                        {"stats", modeldetail::stats_to_json(v)}});
  ojson coarse = ojson::array();
  for (const auto& [k, v] : s.coarse)
    coarse.push_back(
        ojson{{"stage_kind", to_string(k)}, {"stats", modeldetail::stats_to_json(v)}});
  return ojson{{"format", "tiersim-model-v1"},
               {"min_samples", s.min_samples},
               {"global", modeldetail::stats_to_json(s.global)},
               {"fine", std::move(fine)},
               {"mid", std::move(mid)},
               {"coarse", std::move(coarse)}};
}

inline ModelStore model_from_json(const ojson& j) {
  ModelStore s;
  if (j.value("format", "") != "tiersim-model-v1")
    throw parse_error("model store: unknown format tag");
  s.min_samples = j.at("min_samples").get<std::uint64_t>();
  s.global = modeldetail::stats_from_json(j.at("global"));
  for (const auto& e : j.at("fine"))
    s.fine[{e.at("pipeline").get<std::string>(), e.at("config").get<std::string>(),
            e.at("stage").get<std::string>()}] = modeldetail::stats_from_json(e.at("stats"));
  for (const auto& e : j.at("mid"))
    s.mid[{e.at("pipeline").get<std::string>(), e.at("stage").get<std::string>()}] =
        modeldetail::stats_from_json(e.at("stats"));
  for (const auto& e : j.at("coarse"))
    s.coarse[stage_kind_from_string(e.at("stage_kind").get<std::string>())] =
        modeldetail::stats_from_json(e.at("stats"));
  return s;
}

inline void save_model(const ModelStore& s, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << to_json(s).dump(2) << '\n';
  out.flush();
  if (!out) throw io_error("write failed for " + path.string());
}

inline ModelStore load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
}

}  // namespace tiersim
