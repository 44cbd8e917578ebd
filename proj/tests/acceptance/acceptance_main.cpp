// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if
// any fails. Each check states its bound inline; calibration bounds were
// measured on the shipped fixtures before being frozen here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tiersim/econ.hpp"
#include "tiersim/placement.hpp"
#include "tiersim/predictor.hpp"
#include "tiersim/report.hpp"
#include "tiersim/rng.hpp"
#include "tiersim/sim.hpp"
#include "tiersim/trace.hpp"
#include "tiersim/workload.hpp"

#ifndef TIERSIM_CLI_PATH
#error "TIERSIM_CLI_PATH must be defined"
#endif
#ifndef TIERSIM_FIXTURE_DIR
#error "TIERSIM_FIXTURE_DIR must be defined"
#endif
#ifndef TIERSIM_TEST_TMP
#error "TIERSIM_TEST_TMP must be defined"
#endif

namespace fs = std::filesystem;
using namespace tiersim;

namespace {

int g_failures = 0;

void report(int n, const std::string& label, bool ok, const std::string& detail) {
  std::printf("%s %2d: %s (%s)\n", ok ? "PASS" : "FAIL", n, label.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <typename Fn>
void criterion(int n, const std::string& label, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(n, label, false, std::string("exception: ") + e.what());
  }
}

std::string fixture(const char* name) {
  return (fs::path(TIERSIM_FIXTURE_DIR) / name).string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw io_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args, const std::string& cwd = "") {
  std::string cmd;
  if (!cwd.empty()) cmd = "cd " + cwd + " && ";
  cmd += std::string(TIERSIM_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// --- 1: the density threshold must be exactly the per-file cost argmin ----

void check_crossover_equivalence() {
  Rng rng(20260819);
  std::uint64_t checked = 0, mismatched = 0;

  for (int mi = 0; mi < 20; ++mi) {
    CostModel m;
    m.hdd_iops_cap = std::exp(rng.uniform(std::log(10.0), std::log(1000.0)));
    m.tco_hdd = std::exp(rng.uniform(std::log(0.2), std::log(5.0)));
    m.tco_ssd_per_tb = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    // flash must cost at least as much per stored TB as spindle space,
    // otherwise HDDs are pointless and the threshold rule has no meaning
    m.hdd_capacity_tb =
        m.tco_hdd / m.tco_ssd_per_tb * std::exp(rng.uniform(0.0, std::log(100.0)));
    validate(m);

    for (int fi = 0; fi < 10'000; ++fi) {
      TempFileRecord f;
      f.file_id = static_cast<std::uint64_t>(fi) + 1;
      f.run_id = 1;
      f.stage_id = "s";
      f.created_s = 0.0;
      f.deleted_s = std::exp(rng.uniform(std::log(1.0), std::log(1e6)));
      f.size_bytes = static_cast<std::uint64_t>(
          std::llround(std::exp(rng.uniform(std::log(1.0), std::log(1e13)))));
      if (f.size_bytes == 0) f.size_bytes = 1;
      // include plenty of idle files: ops may be zero
      const double ops = rng.uniform01() < 0.1
                             ? 0.0
                             : std::exp(rng.uniform(std::log(1.0), std::log(1e12)));
      f.total_ops = static_cast<std::uint64_t>(ops);

      const Tier rule = oracle_tier(f, m);
      const double ch = cost_on_hdd(f, m);
      const double cs = cost_on_ssd(f, m);
      const Tier argmin = cs < ch ? Tier::ssd : Tier::hdd;  // tie goes to HDD
      ++checked;
      if (rule != argmin) ++mismatched;
    }
  }

  // a file sitting exactly on the crossover must land on HDD
  {
    const CostModel m;  // crossover exactly 150 IOPS/TB
    TempFileRecord f;
    f.file_id = 1;
    f.run_id = 1;
    f.stage_id = "s";
    f.created_s = 0.0;
    f.deleted_s = 1000.0;
    f.size_bytes = 1'000'000'000'000ull;
    f.total_ops = 150'000;  // avg 150 IOPS on 1 TB: the break-even point
    ++checked;
    if (oracle_tier(f, m) != Tier::hdd || cost_on_hdd(f, m) != cost_on_ssd(f, m)) ++mismatched;
  }

  report(1, "tier rule equals per-file cost argmin", mismatched == 0,
         std::to_string(checked) + " files across 20 cost models, " +
             std::to_string(mismatched) + " mismatches");
}

// --- 2: shuffle density scatter calibration -------------------------------

void check_density_calibration() {
  const GeneratorConfig cfg = load_generator_config(fixture("fig2.json"));
  const Trace t = generate(cfg);
  const auto pts = density_scatter(t);
  const CostModel m;
  std::size_t above = 0;
  for (const auto& p : pts)
    if (p.density() > crossover_density(m)) ++above;
  const double frac = pts.empty() ? 0.0 : double(above) / double(pts.size());

  const bool count_ok = pts.size() >= 900 && pts.size() <= 1100;
  const bool frac_ok = frac >= 0.65 && frac <= 0.75;
  report(2, "shuffle density calibration (fixtures/fig2.json)", count_ok && frac_ok,
         std::to_string(pts.size()) + " aggregates, " + fmt_double(frac) +
             " above 150 IOPS/TB, want ~1000 and [0.65, 0.75]");
}

// --- 3: environment stretch spread, constant total work -------------------

void check_stretch_spread() {
  const GeneratorConfig cfg = load_generator_config(fixture("stretch5.json"));
  const Trace t = generate(cfg);

  double dmin = 1e300, dmax = 0.0;
  for (const auto& r : t.runs) {
    dmin = std::min(dmin, r.duration_s());
    dmax = std::max(dmax, r.duration_s());
  }
  const double ratio = dmax / dmin;

  // identical work => identical ops, run by run, stage by stage
  std::map<std::uint64_t, std::map<std::string, std::multiset<std::uint64_t>>> per_run;
  for (const auto& f : t.files) per_run[f.run_id][f.stage_id].insert(f.total_ops);
  bool ops_identical = !per_run.empty();
  for (const auto& [rid, m] : per_run) ops_identical = ops_identical && m == per_run.begin()->second;

  const bool ratio_ok = ratio >= 3.0 && ratio <= 5.0;
  report(3, "completion stretch spread (fixtures/stretch5.json)", ratio_ok && ops_identical,
         "max/min duration " + fmt_double(ratio) + " want [3, 5], ops identical across runs: " +
             (ops_identical ? "yes" : "no"));
}

// --- 4: heavy-tailed config multiplicity ----------------------------------

void check_config_multiplicity() {
  const GeneratorConfig cfg = load_generator_config(fixture("heavy_configs.json"));
  const Trace t = generate(cfg);
  const auto hist = config_histogram(t);
  std::size_t best = 0;
  for (const auto& [pid, n] : hist) best = std::max(best, n);
  report(4, "config multiplicity (fixtures/heavy_configs.json)", best >= 50,
         "busiest pipeline ran " + std::to_string(best) + " distinct configs, want >= 50");
}

// --- 5: predictor exactness without noise, accuracy under noise -----------

void check_predictor_quality() {
  const CostModel m;

  const Trace clean = generate(load_generator_config(fixture("zero_noise.json")));
  const ModelStore s1 = train(clean);
  const EvalReport r1 = evaluate(s1, clean, m);

  const Trace noisy = generate(load_generator_config(fixture("noise10.json")));
  const ModelStore s2 = train(noisy);
  const EvalReport r2 = evaluate(s2, noisy, m);

  const bool exact_ok = r1.density_mape == 0.0 && r1.tier_accuracy == 1.0;
  const bool noisy_ok = r2.tier_accuracy >= 0.90;
  report(5, "predictor exactness and noise tolerance", exact_ok && noisy_ok,
         "clean MAPE " + fmt_double(r1.density_mape) + " accuracy " +
             fmt_double(r1.tier_accuracy) + " (want exactly 0 and 1); noisy accuracy " +
             fmt_double(r2.tier_accuracy) + " (want >= 0.9)");
}

// --- 6: perfect predictions make the predicted policy match the oracle ----

void check_policy_equivalence() {
  const Trace t = generate(load_generator_config(fixture("zero_noise.json")));
  const ModelStore store = train(t);
  const CostModel m;
  const DeviceFleet fleet;  // unbounded SSD

  std::vector<PlacementLogEntry> lp, lo;
  run_simulation(t, PolicyKind::predicted_threshold, fleet, m, &store, 0, &lp);
  run_simulation(t, PolicyKind::oracle_threshold, fleet, m, nullptr, 0, &lo);

  std::size_t diffs = 0;
  bool shape_ok = lp.size() == lo.size() && lp.size() == t.files.size();
  for (std::size_t i = 0; shape_ok && i < lp.size(); ++i)
    if (lp[i].file_id != lo[i].file_id || lp[i].tier != lo[i].tier) ++diffs;
  report(6, "predicted matches oracle under perfect predictions", shape_ok && diffs == 0,
         std::to_string(lp.size()) + " placements compared, " + std::to_string(diffs) +
             " disagreements");
}

// --- 7: greedy admission/eviction vs subset enumeration -------------------

void check_greedy_optimality() {
  Rng rng(7702);
  const CostModel m;
  const double cross = crossover_density(m);
  std::size_t bad_sets = 0, eviction_violations = 0, evictions_seen = 0;

  // uniform sizes: the reachable optimum is the best admissible subset
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 14));
    const int cap = static_cast<int>(rng.uniform_int(0, static_cast<std::uint64_t>(n)));
    std::vector<double> scores;
    for (int i = 0; i < n; ++i)
      scores.push_back(cross * std::exp(rng.uniform(-2.0, 2.0)));

    SsdState state(static_cast<double>(cap));
    for (int i = 0; i < n; ++i) {
      Prediction p;
      p.predicted_avg_iops = scores[i];
      p.predicted_size_bytes = kBytesPerTb;  // 1 TB each
      p.predicted_density = scores[i];
      const FileContext ctx{static_cast<std::uint64_t>(i), 1.0};
      decide(PolicyKind::capacity_score, ctx, &p, nullptr, state, m);
    }

    std::set<std::uint64_t> got;
    for (const auto& r : state.residents()) got.insert(r.file_id);

    // enumerate every admissible subset: <= cap files, all above the
    // admission threshold; maximize total score
    std::set<std::uint64_t> best;
    double best_total = -1.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      int cnt = 0;
      double total = 0.0;
      bool admissible = true;
      for (int i = 0; i < n && admissible; ++i)
        if (mask & (1u << i)) {
          ++cnt;
          total += scores[i];
          admissible = scores[i] > cross;
        }
      if (!admissible || cnt > cap) continue;
      if (total > best_total) {
        best_total = total;
        best.clear();
        for (int i = 0; i < n; ++i)
          if (mask & (1u << i)) best.insert(i);
      }
    }
    if (got != best) ++bad_sets;
  }

  // mixed sizes: every eviction must strictly raise resident predicted
  // IOPS and never displace an equal-or-better file
  for (int inst = 0; inst < 100; ++inst) {
    SsdState state(4.0);
    std::vector<std::uint64_t> resident_ids;
    for (int i = 0; i < 30; ++i) {
      const double size_tb = rng.uniform(0.1, 3.0);
      const double sc = cross * std::exp(rng.uniform(-1.5, 1.5));
      Prediction p;
      p.predicted_avg_iops = sc * size_tb;
      p.predicted_size_bytes = size_tb * kBytesPerTb;
      p.predicted_density = sc;
      const FileContext ctx{static_cast<std::uint64_t>(inst * 100 + i), size_tb};

      std::map<std::uint64_t, double> score_before;
      for (const auto& res : state.residents()) score_before[res.file_id] = res.score;
      const double before = state.resident_iops();

      const PlacementDecision d =
          decide(PolicyKind::capacity_score, ctx, &p, nullptr, state, m);
      if (!d.evictions.empty()) {
        ++evictions_seen;
        if (d.tier != Tier::ssd) ++eviction_violations;
        if (!(state.resident_iops() > before)) ++eviction_violations;
        for (const std::uint64_t victim : d.evictions)
          if (!(score_before.at(victim) < d.score)) ++eviction_violations;
      }
      if (d.tier == Tier::ssd) resident_ids.push_back(ctx.file_id);
      if (i % 7 == 3 && !resident_ids.empty()) {
        release(state, resident_ids.front());
        resident_ids.erase(resident_ids.begin());
      }
      if (state.used_tb() > state.capacity_tb() + 1e-12) ++eviction_violations;
    }
  }

  report(7, "capacity-score matches subset-enumeration optimum",
         bad_sets == 0 && eviction_violations == 0,
         "200 uniform-size instances, " + std::to_string(bad_sets) + " wrong sets; " +
             std::to_string(evictions_seen) + " evictions, " +
             std::to_string(eviction_violations) + " violations");
}

// --- 8: the oracle strictly beats both static baselines -------------------

void check_oracle_dominance() {
  const Trace t = generate(load_generator_config(fixture("fig2.json")));
  const CostModel m;
  const DeviceFleet fleet;  // unbounded SSD

  const MetricsReport hdd = run_simulation(t, PolicyKind::all_hdd, fleet, m, nullptr, 0);
  const MetricsReport ssd = run_simulation(t, PolicyKind::all_ssd, fleet, m, nullptr, 0);
  const MetricsReport orc = run_simulation(t, PolicyKind::oracle_threshold, fleet, m, nullptr, 0);

  const bool ok = orc.total_cost_units < hdd.total_cost_units &&
                  orc.total_cost_units < ssd.total_cost_units;
  report(8, "oracle strictly beats both static baselines", ok,
         "oracle " + fmt_double(orc.total_cost_units) + " vs all-hdd " +
             fmt_double(hdd.total_cost_units) + " vs all-ssd " +
             fmt_double(ssd.total_cost_units));
}

// --- 9: exact throttling arithmetic ---------------------------------------

void check_throttling_arithmetic() {
  Trace t;
  PipelineSpec p;
  p.pipeline_id = "p";
  p.stages = {{"s0", StageKind::source, 0, 1, 0},
              {"s1", StageKind::shuffle, 1, 1, 1},
              {"s2", StageKind::sink, 1, 0, 2}};
  p.edges = {{"s0", "s1"}, {"s1", "s2"}};
  t.pipelines.push_back(p);

  RunMeta r;
  r.run_id = 1;
  r.pipeline_id = "p";
  r.config_id = "c";
  r.input_bytes = 1;
  r.start_s = 0.0;
  r.end_s = 3000.0;
  t.runs.push_back(r);

  TempFileRecord f;
  f.file_id = 1;
  f.run_id = 1;
  f.stage_id = "s1";
  f.created_s = 1000.0;
  f.deleted_s = 2000.0;
  f.size_bytes = 1'000'000'000'000ull;
  f.total_ops = 300'000;  // 300 avg IOPS against a single 150 IOPS spindle
  f.is_shuffle = true;
  t.files.push_back(f);

  const DeviceFleet fleet{1, 0.0};
  const MetricsReport rep =
      run_simulation(t, PolicyKind::all_hdd, fleet, CostModel{}, nullptr, 0);
  const bool ok = rep.mean_stretch == 2.0 && rep.throttled_file_count == 1;
  report(9, "throttling stretch arithmetic", ok,
         "stretch " + fmt_double(rep.mean_stretch) + " want exactly 2, throttled " +
             std::to_string(rep.throttled_file_count) + " want 1");
}

// --- 10: byte-identical artifacts when commands repeat --------------------

void check_artifact_determinism() {
  const fs::path tmp = fs::path(TIERSIM_TEST_TMP) / "acceptance";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "a");
  fs::create_directories(tmp / "b");

  const std::string fig2 = fixture("fig2.json");
  const std::string sweep_spec = fixture("sweep_demo.json");
  std::vector<std::string> mismatches;

  auto expect_same = [&](const fs::path& x, const fs::path& y, const char* what) {
    if (slurp(x) != slurp(y)) mismatches.push_back(what);
  };
  auto must_run = [&](const std::string& args, const std::string& cwd = "") {
    if (run_cli(args, cwd) != 0) mismatches.push_back("command failed: " + args);
  };

  for (const char* side : {"a", "b"}) {
    const std::string d = (tmp / side).string();
    must_run("gen --config " + fig2 + " --seed 7 --out " + d + "/trace.jsonl");
    must_run("train --trace " + d + "/trace.jsonl --out " + d + "/model.json");
    must_run("simulate --trace " + d + "/trace.jsonl --policy capacity-score --model " + d +
             "/model.json --ssd-capacity-tb 50 --out " + d + "/report.json");
    must_run("report --trace " + d + "/trace.jsonl --out " + d + "/rep");
    must_run("sweep --spec " + sweep_spec, d);
  }

  expect_same(tmp / "a/trace.jsonl", tmp / "b/trace.jsonl", "trace");
  expect_same(tmp / "a/model.json", tmp / "b/model.json", "model");
  expect_same(tmp / "a/report.json", tmp / "b/report.json", "simulation report");
  expect_same(tmp / "a/rep/scatter.svg", tmp / "b/rep/scatter.svg", "scatter SVG");
  expect_same(tmp / "a/rep/summary.csv", tmp / "b/rep/summary.csv", "scatter summary");
  expect_same(tmp / "a/sweep_out/sweep.csv", tmp / "b/sweep_out/sweep.csv", "sweep CSV");

  std::string detail = "trace, model, report, SVG, summary, sweep all byte-identical";
  if (!mismatches.empty()) {
    detail = "differs: ";
    for (const auto& s : mismatches) detail += s + "; ";
  }
  report(10, "byte-identical artifacts on repeated commands", mismatches.empty(), detail);
}

}  // namespace

int main() {
  criterion(1, "tier rule equals per-file cost argmin", check_crossover_equivalence);
  criterion(2, "shuffle density calibration (fixtures/fig2.json)", check_density_calibration);
  criterion(3, "completion stretch spread (fixtures/stretch5.json)", check_stretch_spread);
  criterion(4, "config multiplicity (fixtures/heavy_configs.json)", check_config_multiplicity);
  criterion(5, "predictor exactness and noise tolerance", check_predictor_quality);
  criterion(6, "predicted matches oracle under perfect predictions", check_policy_equivalence);
  criterion(7, "capacity-score matches subset-enumeration optimum", check_greedy_optimality);
  criterion(8, "oracle strictly beats both static baselines", check_oracle_dominance);
  criterion(9, "throttling stretch arithmetic", check_throttling_arithmetic);
  criterion(10, "byte-identical artifacts on repeated commands", check_artifact_determinism);

  if (g_failures != 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 10 criteria passed\n");
  return 0;
}
