#pragma once

// Trace-driven placement simulator. Replays file creations and deletions
// in time order, applies one policy, and accounts for cost, SSD occupancy
// and HDD congestion. Congestion is a single first-order pass: intervals
// where aggregate HDD demand exceeds fleet capacity stretch the files that
// live through them; the stretch is reported, not fed back into the
// timeline.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "tiersim/econ.hpp"
#include "tiersim/placement.hpp"
#include "tiersim/predictor.hpp"
#include "tiersim/trace.hpp"

namespace tiersim {

struct DeviceFleet {
  std::uint32_t hdd_count = 1;
  double ssd_capacity_tb = 1e18;  // effectively unbounded by default
};

inline void validate(const DeviceFleet& f) {
  if (f.hdd_count < 1) throw validation_error("fleet: hdd_count must be >= 1");
  if (!(std::isfinite(f.ssd_capacity_tb) && f.ssd_capacity_tb >= 0.0))
    throw validation_error("fleet: ssd_capacity_tb must be >= 0");
}

struct MetricsReport {
  std::string policy;
  std::uint64_t seed = 0;
  std::uint64_t file_count = 0;
  double total_cost_units = 0.0;        // sum of per-file cost on the tier chosen at creation
  double ssd_tb_hours = 0.0;            // integrated actual SSD residency
  double hdd_demand_peak_iops = 0.0;
  std::uint64_t throttled_file_count = 0;
  double mean_stretch = 0.0;            // over all files; 1.0 means no slowdown
  double iops_served_ssd_fraction = 0.0;
  double misplacement_rate = 0.0;       // disagreement with the cost-optimal tier
  std::uint64_t evicted_bytes = 0;
  std::uint64_t ssd_placements = 0;
  std::uint64_t hdd_placements = 0;
};

struct PlacementLogEntry {
  std::uint64_t file_id = 0;
  Tier tier = Tier::hdd;
  std::vector<std::uint64_t> evictions;
  double score = 0.0;
};

inline MetricsReport run_simulation(const Trace& trace, PolicyKind policy,
                                    const DeviceFleet& fleet, const CostModel& model,
                                    const ModelStore* store, std::uint64_t seed,
                                    std::vector<PlacementLogEntry>* placement_log = nullptr) {
  validate(fleet);
  validate(model);
  validate(trace);
  if (policy_needs_model(policy) && store == nullptr)
    throw validation_error("policy '" + std::string(to_string(policy)) +
                           "' requires a trained model store");

  MetricsReport rep;
  rep.policy = to_string(policy);
  rep.seed = seed;
  if (trace.files.empty()) return rep;
  rep.file_count = trace.files.size();

  std::map<std::uint64_t, const RunMeta*> runs;
  std::map<std::string, const PipelineSpec*> pipelines;
  for (const auto& r : trace.runs) runs[r.run_id] = &r;
  for (const auto& p : trace.pipelines) pipelines[p.pipeline_id] = &p;

  struct FileState {
    const TempFileRecord* rec = nullptr;
    Tier placed = Tier::hdd;   // tier chosen at creation
    double ssd_until = -1.0;   // valid when placed on SSD; set on evict/delete
    bool evicted = false;
  };
  std::map<std::uint64_t, std::size_t> index;
  std::vector<FileState> fs(trace.files.size());
  for (std::size_t i = 0; i < trace.files.size(); ++i) {
    fs[i].rec = &trace.files[i];
    index[trace.files[i].file_id] = i;
  }

  enum EvKind { kDelete = 0, kCreate = 1 };
  struct Event {
    double t;
    std::uint64_t file_id;
    EvKind kind;
  };
  std::vector<Event> events;
  events.reserve(2 * trace.files.size());
  for (const auto& f : trace.files) {
    events.push_back({f.created_s, f.file_id, kCreate});
    events.push_back({f.deleted_s, f.file_id, kDelete});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.file_id != b.file_id) return a.file_id < b.file_id;
    return a.kind < b.kind;
  });

  SsdState ssd(fleet.ssd_capacity_tb);
  std::uint64_t misplaced = 0;

  for (const auto& ev : events) {
    FileState& st = fs[index[ev.file_id]];
    const TempFileRecord& f = *st.rec;
    if (ev.kind == kCreate) {
      const RunMeta& run = *runs.at(f.run_id);
      Prediction pred;
      const Prediction* pred_ptr = nullptr;
      if (policy_needs_model(policy)) {
        pred = store->predict(extract_features(run, *pipelines.at(run.pipeline_id), f.stage_id));
        pred_ptr = &pred;
      }
      const FileContext ctx{f.file_id, size_tb(f.size_bytes)};
      const PlacementDecision d = decide(policy, ctx, pred_ptr, &f, ssd, model);

      st.placed = d.tier;
      for (std::uint64_t victim_id : d.evictions) {
        FileState& vs = fs[index[victim_id]];
        vs.ssd_until = ev.t;  // moves to HDD for the rest of its life
        vs.evicted = true;
        rep.evicted_bytes += vs.rec->size_bytes;
      }
      rep.total_cost_units +=
          d.tier == Tier::ssd ? cost_on_ssd(f, model) : cost_on_hdd(f, model);
      if (d.tier != oracle_tier(f, model)) ++misplaced;
      (d.tier == Tier::ssd ? rep.ssd_placements : rep.hdd_placements)++;
      if (placement_log != nullptr)
        placement_log->push_back({f.file_id, d.tier, d.evictions, d.score});
    } else {
      if (ssd.contains(f.file_id)) {
        st.ssd_until = ev.t;
        release(ssd, f.file_id);
      }
    }
  }

  // Interval bookkeeping over the distinct event times. A file's HDD span
  // is its whole life, or the tail after an eviction, or nothing.
  std::vector<double> times;
  times.reserve(events.size());
  for (const auto& ev : events) times.push_back(ev.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  auto time_index = [&](double t) {
    return static_cast<std::size_t>(
        std::lower_bound(times.begin(), times.end(), t) - times.begin());
  };

  const std::size_t n_iv = times.size() - 1;
  std::vector<double> demand_delta(times.size(), 0.0);
  for (const auto& st : fs) {
    const TempFileRecord& f = *st.rec;
    double hdd_from = f.created_s;
    if (st.placed == Tier::ssd) {
      if (!st.evicted) continue;  // served from flash its whole life
      hdd_from = st.ssd_until;
    }
    if (hdd_from >= f.deleted_s) continue;
    demand_delta[time_index(hdd_from)] += avg_iops(f);
    demand_delta[time_index(f.deleted_s)] -= avg_iops(f);
  }

  const double hdd_cap = static_cast<double>(fleet.hdd_count) * model.hdd_iops_cap;
  std::vector<double> stretched_prefix(times.size(), 0.0);  // sum dt * stretch ratio
  std::vector<std::uint32_t> overload_prefix(times.size(), 0);
  double demand = 0.0;
  for (std::size_t i = 0; i < n_iv; ++i) {
    demand += demand_delta[i];
    rep.hdd_demand_peak_iops = std::max(rep.hdd_demand_peak_iops, demand);
    const double dt = times[i + 1] - times[i];
    const bool over = demand > hdd_cap;
    const double ratio = over ? demand / hdd_cap : 1.0;
    stretched_prefix[i + 1] = stretched_prefix[i] + dt * ratio;
    overload_prefix[i + 1] = overload_prefix[i] + (over ? 1 : 0);
  }

  double stretch_sum = 0.0;
  double ssd_ops = 0.0, total_ops = 0.0;
  for (const auto& st : fs) {
    const TempFileRecord& f = *st.rec;
    const double life = f.lifetime_s();

    double ssd_span = 0.0;
    double hdd_from = f.created_s;
    if (st.placed == Tier::ssd) {
      // ssd_until was stamped either at eviction or at deletion
      ssd_span = st.ssd_until - f.created_s;
      hdd_from = st.ssd_until;
    }
    rep.ssd_tb_hours += size_tb(f.size_bytes) * (ssd_span / 3600.0);

    total_ops += static_cast<double>(f.total_ops);
    ssd_ops += static_cast<double>(f.total_ops) * (ssd_span / life);

    double stretch = 1.0;
    if (hdd_from < f.deleted_s) {
      const std::size_t a = time_index(hdd_from);
      const std::size_t b = time_index(f.deleted_s);
      if (overload_prefix[b] > overload_prefix[a]) {  // saw at least one hot interval
        const double eff_hdd = stretched_prefix[b] - stretched_prefix[a];
        const double eff = ssd_span + eff_hdd;
        stretch = eff / life;
        if (stretch > 1.0) ++rep.throttled_file_count;
      }
    }
    stretch_sum += stretch;
  }

  rep.mean_stretch = stretch_sum / static_cast<double>(rep.file_count);
  rep.iops_served_ssd_fraction = total_ops > 0.0 ? ssd_ops / total_ops : 0.0;
  rep.misplacement_rate = static_cast<double>(misplaced) / static_cast<double>(rep.file_count);
  return rep;
}

inline std::vector<MetricsReport> compare_policies(const Trace& trace,
                                                   std::vector<PolicyKind> policies,
                                                   const DeviceFleet& fleet,
                                                   const CostModel& model,
                                                   const ModelStore* store, std::uint64_t seed) {
  std::vector<MetricsReport> out;
  out.reserve(policies.size());
  for (PolicyKind p : policies) out.push_back(run_simulation(trace, p, fleet, model, store, seed));
  std::sort(out.begin(), out.end(),
            [](const MetricsReport& a, const MetricsReport& b) { return a.policy < b.policy; });
  return out;
}

namespace simdetail {

// shortest round-trip decimal, deterministic across runs
inline std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

inline std::string csv_row(const MetricsReport& r, bool with_seed) {
  std::string row = r.policy;
  if (with_seed) row += "," + fmt(r.seed);
  row += "," + fmt(r.total_cost_units);
  row += "," + fmt(r.ssd_tb_hours);
  row += "," + fmt(r.iops_served_ssd_fraction);
  row += "," + fmt(r.throttled_file_count);
  row += "," + fmt(r.mean_stretch);
  row += "," + fmt(r.misplacement_rate);
  row += "," + fmt(r.evicted_bytes);
  return row + "\n";
}

inline constexpr const char* kMetricColumns =
    "total_cost_units,ssd_tb_hours,iops_served_ssd_fraction,throttled_file_count,"
    "mean_stretch,misplacement_rate,evicted_bytes";

}  // namespace simdetail

// One row per policy, rows pre-sorted by compare_policies.
inline std::string comparison_csv(const std::vector<MetricsReport>& rows) {
  std::string out = std::string("policy,") + simdetail::kMetricColumns + "\n";
  for (const auto& r : rows) out += simdetail::csv_row(r, false);
  return out;
}

// Merged policy x seed grid, sorted by (policy, seed).
inline std::string sweep_csv(std::vector<MetricsReport> rows) {
  std::sort(rows.begin(), rows.end(), [](const MetricsReport& a, const MetricsReport& b) {
    if (a.policy != b.policy) return a.policy < b.policy;
    return a.seed < b.seed;
  });
  std::string out = std::string("policy,seed,") + simdetail::kMetricColumns + "\n";
  for (const auto& r : rows) out += simdetail::csv_row(r, true);
  return out;
}

inline ojson to_json(const MetricsReport& r) {
  return ojson{{"policy", r.policy},
               {"seed", r.seed},
               {"file_count", r.file_count},
               {"total_cost_units", r.total_cost_units},
               {"ssd_tb_hours", r.ssd_tb_hours},
               {"hdd_demand_peak_iops", r.hdd_demand_peak_iops},
               {"throttled_file_count", r.throttled_file_count},
               {"mean_stretch", r.mean_stretch},
               {"iops_served_ssd_fraction", r.iops_served_ssd_fraction},
               {"misplacement_rate", r.misplacement_rate},
               {"evicted_bytes", r.evicted_bytes},
               {"ssd_placements", r.ssd_placements},
               {"hdd_placements", r.hdd_placements}};
}

}  // namespace tiersim
