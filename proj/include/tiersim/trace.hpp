#pragma once

// Core trace model: pipelines, runs and the temporary files they emit,
// plus JSONL persistence. Everything downstream (generator, predictor,
// policies, simulator) works against these types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tiersim {

using ojson = nlohmann::ordered_json;

class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kBytesPerTb = 1e12;  // decimal TB throughout

enum class StageKind { source, map, shuffle, reduce, sink };

inline std::string_view to_string(StageKind k) {
  switch (k) {
    case StageKind::source: return "source";
    case StageKind::map: return "map";
    case StageKind::shuffle: return "shuffle";
    case StageKind::reduce: return "reduce";
    case StageKind::sink: return "sink";
  }
  return "?";
}

inline StageKind stage_kind_from_string(std::string_view s) {
  if (s == "source") return StageKind::source;
  if (s == "map") return StageKind::map;
  if (s == "shuffle") return StageKind::shuffle;
  if (s == "reduce") return StageKind::reduce;
  if (s == "sink") return StageKind::sink;
  throw parse_error("unknown stage kind '" + std::string(s) + "'");
}

struct StageSpec {
  std::string stage_id;
  StageKind kind = StageKind::map;
  std::uint32_t fan_in = 0;   // predecessor count
  std::uint32_t fan_out = 0;  // successor count
  std::uint32_t depth = 0;    // hops from a source
  bool operator==(const StageSpec&) const = default;
};

struct PipelineSpec {
  std::string pipeline_id;
  std::vector<StageSpec> stages;                            // topological order
  std::vector<std::pair<std::string, std::string>> edges;   // (from, to)
  bool operator==(const PipelineSpec&) const = default;

  const StageSpec* find_stage(std::string_view id) const {
    for (const auto& s : stages)
      if (s.stage_id == id) return &s;
    return nullptr;
  }
};

struct RunMeta {
  std::uint64_t run_id = 0;
  std::string pipeline_id;
  std::string config_id;       // build/flag variant of the pipeline
  std::uint64_t input_bytes = 0;
  int priority = 0;
  double load_factor = 0.0;    // cluster contention at run start, >= 0
  double start_s = 0.0;
  double end_s = 0.0;
  bool operator==(const RunMeta&) const = default;

  double duration_s() const { return end_s - start_s; }
};

// Contention-to-slowdown convention shared by the generator and the
// predictor: a run under load_factor L takes (1 + L) times as long.
inline double expected_stretch(double load_factor) { return 1.0 + load_factor; }

struct TempFileRecord {
  std::uint64_t file_id = 0;
  std::uint64_t run_id = 0;
  std::string stage_id;
  double created_s = 0.0;
  double deleted_s = 0.0;
  std::uint64_t size_bytes = 0;
  std::uint64_t total_ops = 0;  // reads + writes over the whole lifetime
  bool is_shuffle = false;
  bool operator==(const TempFileRecord&) const = default;

  double lifetime_s() const { return deleted_s - created_s; }
};

struct Trace {
  std::vector<PipelineSpec> pipelines;
  std::vector<RunMeta> runs;
  std::vector<TempFileRecord> files;
  bool operator==(const Trace&) const = default;

  const PipelineSpec* find_pipeline(std::string_view id) const {
    for (const auto& p : pipelines)
      if (p.pipeline_id == id) return &p;
    return nullptr;
  }
  const RunMeta* find_run(std::uint64_t id) const {
    for (const auto& r : runs)
      if (r.run_id == id) return &r;
    return nullptr;
  }
};

inline double size_tb(std::uint64_t bytes) { return static_cast<double>(bytes) / kBytesPerTb; }

// Lifetime-average IOPS; files with no I/O rate 0.
inline double avg_iops(const TempFileRecord& f) {
  return static_cast<double>(f.total_ops) / f.lifetime_s();
}

// I/O density in IOPS per decimal TB, the quantity placement decisions
// are keyed on.
inline double io_density(const TempFileRecord& f) {
  return avg_iops(f) / size_tb(f.size_bytes);
}

namespace detail {

inline bool finite(double v) { return std::isfinite(v); }

inline void check(bool ok, const std::string& what) {
  if (!ok) throw validation_error(what);
}

inline void validate_pipeline(const PipelineSpec& p) {
  const std::string tag = "pipeline " + p.pipeline_id + ": ";
  check(!p.pipeline_id.empty(), "pipeline with empty pipeline_id");
  check(!p.stages.empty(), tag + "no stages");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < p.stages.size(); ++i) {
    const auto& s = p.stages[i];
    check(!s.stage_id.empty(), tag + "stage with empty stage_id");
    check(index.emplace(s.stage_id, i).second, tag + "duplicate stage id '" + s.stage_id + "'");
  }

  std::vector<std::uint32_t> in_deg(p.stages.size(), 0), out_deg(p.stages.size(), 0);
  std::vector<std::vector<std::size_t>> succ(p.stages.size());
  for (const auto& [from, to] : p.edges) {
    auto fi = index.find(from);
    auto ti = index.find(to);
    check(fi != index.end(), tag + "edge from unknown stage '" + from + "'");
    check(ti != index.end(), tag + "edge to unknown stage '" + to + "'");
    out_deg[fi->second]++;
    in_deg[ti->second]++;
    succ[fi->second].push_back(ti->second);
  }

  bool has_source = false, has_sink = false;
  for (std::size_t i = 0; i < p.stages.size(); ++i) {
    const auto& s = p.stages[i];
    const std::string stag = tag + "stage " + s.stage_id + ": ";
    check(s.fan_in == in_deg[i], stag + "fan_in does not match edges");
    check(s.fan_out == out_deg[i], stag + "fan_out does not match edges");
    if (s.kind == StageKind::source) {
      has_source = true;
      check(s.fan_in == 0, stag + "source with predecessors");
      check(s.depth == 0, stag + "source with nonzero depth");
    }
    if (s.kind == StageKind::sink) {
      has_sink = true;
      check(s.fan_out == 0, stag + "sink with successors");
    }
  }
  check(has_source, tag + "no source stage");
  check(has_sink, tag + "no sink stage");

  // Kahn toposort: rejects cycles, then bounds depth by predecessors.
  std::vector<std::uint32_t> deg = in_deg;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < p.stages.size(); ++i)
    if (deg[i] == 0) order.push_back(i);
  for (std::size_t k = 0; k < order.size(); ++k)
    for (std::size_t nxt : succ[order[k]])
      if (--deg[nxt] == 0) order.push_back(nxt);
  check(order.size() == p.stages.size(), tag + "stage graph has a cycle");

  std::vector<std::uint32_t> max_pred(p.stages.size(), 0);
  for (std::size_t i : order)
    for (std::size_t nxt : succ[i])
      max_pred[nxt] = std::max(max_pred[nxt], p.stages[i].depth + 1);
  for (std::size_t i = 0; i < p.stages.size(); ++i)
    if (in_deg[i] > 0)
      check(p.stages[i].depth <= max_pred[i],
            tag + "stage " + p.stages[i].stage_id + ": depth exceeds 1 + max predecessor depth");
}

}  // namespace detail

// Full structural check; throws validation_error naming the first
// offending record and rule.
inline void validate(const Trace& t) {
  using detail::check;

  std::map<std::string, const PipelineSpec*> pipelines;
  for (const auto& p : t.pipelines) {
    detail::validate_pipeline(p);
    check(pipelines.emplace(p.pipeline_id, &p).second,
          "duplicate pipeline_id " + p.pipeline_id);
  }

  std::map<std::uint64_t, const RunMeta*> runs;
  for (const auto& r : t.runs) {
    const std::string tag = "run " + std::to_string(r.run_id) + ": ";
    check(runs.emplace(r.run_id, &r).second, tag + "duplicate run_id");
    check(detail::finite(r.start_s) && detail::finite(r.end_s), tag + "non-finite times");
    check(r.end_s > r.start_s, tag + "end_s <= start_s");
    check(r.input_bytes > 0, tag + "input_bytes == 0");
    check(detail::finite(r.load_factor) && r.load_factor >= 0.0, tag + "negative load_factor");
    check(pipelines.count(r.pipeline_id) != 0, tag + "unknown pipeline_id " + r.pipeline_id);
  }

  std::set<std::uint64_t> file_ids;
  for (const auto& f : t.files) {
    const std::string tag = "file " + std::to_string(f.file_id) + ": ";
    check(file_ids.insert(f.file_id).second, tag + "duplicate file_id");
    check(detail::finite(f.created_s) && detail::finite(f.deleted_s), tag + "non-finite times");
    check(f.deleted_s > f.created_s, tag + "deleted_s <= created_s");
    check(f.size_bytes > 0, tag + "size_bytes == 0");
    auto ri = runs.find(f.run_id);
    check(ri != runs.end(), tag + "unknown run_id " + std::to_string(f.run_id));
    const RunMeta& r = *ri->second;
    const PipelineSpec* p = pipelines.at(r.pipeline_id);
    check(p->find_stage(f.stage_id) != nullptr,
          tag + "stage " + f.stage_id + " not in pipeline " + r.pipeline_id);
    check(f.created_s >= r.start_s && f.deleted_s <= r.end_s,
          tag + "lifetime outside run " + std::to_string(r.run_id) + " window");
  }
}

namespace detail {

inline ojson stage_to_json(const StageSpec& s) {
  return ojson{{"stage_id", s.stage_id},
               {"kind", to_string(s.kind)},
               {"fan_in", s.fan_in},
               {"fan_out", s.fan_out},
               {"depth", s.depth}};
}

inline ojson pipeline_to_json(const PipelineSpec& p) {
  ojson stages = ojson::array();
  for (const auto& s : p.stages) stages.push_back(stage_to_json(s));
  ojson edges = ojson::array();
  for (const auto& [from, to] : p.edges) edges.push_back(ojson::array({from, to}));
  return ojson{{"kind", "pipeline"},
               {"pipeline_id", p.pipeline_id},
               {"stages", std::move(stages)},
               {"edges", std::move(edges)}};
}

inline ojson run_to_json(const RunMeta& r) {
  return ojson{{"kind", "run"},
               {"run_id", r.run_id},
               {"pipeline_id", r.pipeline_id},
               {"config_id", r.config_id},
               {"input_bytes", r.input_bytes},
               {"priority", r.priority},
               {"load_factor", r.load_factor},
               {"start_s", r.start_s},
               {"end_s", r.end_s}};
}

inline ojson file_to_json(const TempFileRecord& f) {
  return ojson{{"kind", "file"},
               {"file_id", f.file_id},
               {"run_id", f.run_id},
               {"stage_id", f.stage_id},
               {"created_s", f.created_s},
               {"deleted_s", f.deleted_s},
               {"size_bytes", f.size_bytes},
               {"total_ops", f.total_ops},
               {"is_shuffle", f.is_shuffle}};
}

template <typename T>
T field(const ojson& j, const char* name, std::size_t lineno) {
  auto it = j.find(name);
  if (it == j.end())
    throw parse_error("line " + std::to_string(lineno) + ": missing field '" + name + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw parse_error("line " + std::to_string(lineno) + ": bad field '" + name + "': " +
                      e.what());
  }
}

inline PipelineSpec pipeline_from_json(const ojson& j, std::size_t lineno) {
  PipelineSpec p;
  p.pipeline_id = field<std::string>(j, "pipeline_id", lineno);
  for (const auto& sj : field<ojson>(j, "stages", lineno)) {
    StageSpec s;
    s.stage_id = field<std::string>(sj, "stage_id", lineno);
    s.kind = stage_kind_from_string(field<std::string>(sj, "kind", lineno));
    s.fan_in = field<std::uint32_t>(sj, "fan_in", lineno);
    s.fan_out = field<std::uint32_t>(sj, "fan_out", lineno);
    s.depth = field<std::uint32_t>(sj, "depth", lineno);
    p.stages.push_back(std::move(s));
  }
  for (const auto& ej : field<ojson>(j, "edges", lineno)) {
    if (!ej.is_array() || ej.size() != 2)
      throw parse_error("line " + std::to_string(lineno) + ": edge is not a [from, to] pair");
    p.edges.emplace_back(ej[0].get<std::string>(), ej[1].get<std::string>());
  }
  return p;
}

inline RunMeta run_from_json(const ojson& j, std::size_t lineno) {
  RunMeta r;
  r.run_id = field<std::uint64_t>(j, "run_id", lineno);
  r.pipeline_id = field<std::string>(j, "pipeline_id", lineno);
  r.config_id = field<std::string>(j, "config_id", lineno);
  r.input_bytes = field<std::uint64_t>(j, "input_bytes", lineno);
  r.priority = field<int>(j, "priority", lineno);
  r.load_factor = field<double>(j, "load_factor", lineno);
  r.start_s = field<double>(j, "start_s", lineno);
  r.end_s = field<double>(j, "end_s", lineno);
  return r;
}

inline TempFileRecord file_from_json(const ojson& j, std::size_t lineno) {
  TempFileRecord f;
  f.file_id = field<std::uint64_t>(j, "file_id", lineno);
  f.run_id = field<std::uint64_t>(j, "run_id", lineno);
  f.stage_id = field<std::string>(j, "stage_id", lineno);
  f.created_s = field<double>(j, "created_s", lineno);
  f.deleted_s = field<double>(j, "deleted_s", lineno);
  f.size_bytes = field<std::uint64_t>(j, "size_bytes", lineno);
  f.total_ops = field<std::uint64_t>(j, "total_ops", lineno);
  f.is_shuffle = field<bool>(j, "is_shuffle", lineno);
  return f;
}

}  // namespace detail

// JSONL, one record per line: pipelines first (stored order), then runs by
// ascending run_id, then files by ascending file_id. Doubles keep full
// round-trip precision, so save -> load -> save is byte-identical.
inline void save_trace(const Trace& t, const std::filesystem::path& path) {
  validate(t);
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");

  for (const auto& p : t.pipelines) out << detail::pipeline_to_json(p).dump() << '\n';

  std::vector<const RunMeta*> runs;
  runs.reserve(t.runs.size());
  for (const auto& r : t.runs) runs.push_back(&r);
  std::sort(runs.begin(), runs.end(),
            [](const RunMeta* a, const RunMeta* b) { return a->run_id < b->run_id; });
  for (const auto* r : runs) out << detail::run_to_json(*r).dump() << '\n';

  std::vector<const TempFileRecord*> files;
  files.reserve(t.files.size());
  for (const auto& f : t.files) files.push_back(&f);
  std::sort(files.begin(), files.end(),
            [](const TempFileRecord* a, const TempFileRecord* b) { return a->file_id < b->file_id; });
  for (const auto* f : files) out << detail::file_to_json(*f).dump() << '\n';

  out.flush();
  if (!out) throw io_error("write failed for " + path.string());
}

inline Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());

  Trace t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      const auto kind = detail::field<std::string>(j, "kind", lineno);
      if (kind == "pipeline") {
        t.pipelines.push_back(detail::pipeline_from_json(j, lineno));
      } else if (kind == "run") {
        t.runs.push_back(detail::run_from_json(j, lineno));
      } else if (kind == "file") {
        t.files.push_back(detail::file_from_json(j, lineno));
      } else {
        throw parse_error("line " + std::to_string(lineno) + ": unknown record kind '" + kind +
                          "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate(t);
  return t;
}

}  // namespace tiersim
