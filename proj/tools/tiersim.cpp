// tiersim: generate traces, train the predictor, replay placement policies,
// sweep policy x seed grids, and render density reports.
//
// Exit codes: 0 success, 1 usage error, 2 validation/parse error, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tiersim/econ.hpp"
#include "tiersim/placement.hpp"
#include "tiersim/predictor.hpp"
#include "tiersim/report.hpp"
#include "tiersim/sim.hpp"
#include "tiersim/trace.hpp"
#include "tiersim/workload.hpp"

namespace fs = std::filesystem;
using tiersim::ojson;

namespace {

// command-line level mistakes (unknown policy, missing --model, ...)
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) { return tiersim::simdetail::fmt(v); }

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw tiersim::io_error("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tiersim::io_error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw tiersim::io_error("write to '" + path.string() + "' failed");
}

tiersim::PolicyKind parse_policy_flag(const std::string& name) {
  try {
    return tiersim::policy_from_string(name);
  } catch (const tiersim::validation_error& e) {
    throw usage_error(e.what());
  }
}

struct GenArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
};

void cmd_gen(const GenArgs& a) {
  tiersim::GeneratorConfig cfg;
  if (!a.config_path.empty()) cfg = tiersim::load_generator_config(a.config_path);
  if (a.seed) cfg.seed = *a.seed;
  const tiersim::Trace trace = tiersim::generate(cfg);
  tiersim::save_trace(trace, a.out_path);
  std::cout << "wrote " << a.out_path << ": " << trace.pipelines.size() << " pipelines, "
            << trace.runs.size() << " runs, " << trace.files.size() << " files\n";
}

struct TrainArgs {
  std::string trace_path;
  std::string out_path;
  std::uint64_t min_samples = 3;
};

void cmd_train(const TrainArgs& a) {
  const tiersim::Trace trace = tiersim::load_trace(a.trace_path);
  tiersim::ModelStore store = tiersim::train(trace);
  store.min_samples = a.min_samples;
  tiersim::save_model(store, a.out_path);
  std::cout << "wrote " << a.out_path << ": " << store.fine.size() << " fine, " << store.mid.size()
            << " mid, " << store.coarse.size() << " coarse keys from " << trace.files.size()
            << " files\n";
}

struct SimArgs {
  std::string trace_path;
  std::string policy;
  std::string model_path;
  std::string cost_model_path;
  std::string out_path;
  std::string format = "json";
  double ssd_capacity_tb = 1e18;
  std::uint32_t hdd_count = 1;
  std::uint64_t seed = 0;
};

void cmd_simulate(const SimArgs& a) {
  const tiersim::PolicyKind policy = parse_policy_flag(a.policy);
  if (tiersim::policy_needs_model(policy) && a.model_path.empty())
    throw usage_error("policy '" + a.policy + "' requires --model (a trained model file)");

  const tiersim::Trace trace = tiersim::load_trace(a.trace_path);
  tiersim::CostModel cost;
  if (!a.cost_model_path.empty()) cost = tiersim::load_cost_model(a.cost_model_path);
  std::optional<tiersim::ModelStore> store;
  if (!a.model_path.empty()) store = tiersim::load_model(a.model_path);

  const tiersim::DeviceFleet fleet{a.hdd_count, a.ssd_capacity_tb};
  const tiersim::MetricsReport rep = tiersim::run_simulation(
      trace, policy, fleet, cost, store ? &*store : nullptr, a.seed);

  std::string body;
  if (a.format == "csv")
    body = tiersim::comparison_csv({rep});
  else
    body = tiersim::to_json(rep).dump(2) + "\n";
  if (a.out_path.empty()) {
    std::cout << body;
  } else {
    write_file(a.out_path, body);
    std::cout << "wrote " << a.out_path << ": policy " << rep.policy << ", cost "
              << fmt(rep.total_cost_units) << "\n";
  }
}

struct SweepArgs {
  std::string spec_path;
};

// Experiment spec: JSON object with generator_config / cost_model (paths,
// resolved relative to the spec file), fleet knobs, policies, seeds, out_dir
// (resolved relative to the working directory).
void cmd_sweep(const SweepArgs& a) {
  std::ifstream in(a.spec_path, std::ios::binary);
  if (!in) throw tiersim::io_error("cannot open '" + a.spec_path + "'");
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw tiersim::parse_error(a.spec_path + ": " + e.what());
  }
  if (!j.is_object()) throw tiersim::validation_error("experiment spec: not a JSON object");

  const fs::path spec_dir = fs::absolute(fs::path(a.spec_path)).parent_path();
  const auto resolve = [&](const std::string& p) {
    const fs::path fp(p);
    return fp.is_absolute() ? fp : spec_dir / fp;
  };

  tiersim::GeneratorConfig cfg;
  if (j.contains("generator_config"))
    cfg = tiersim::load_generator_config(resolve(j.at("generator_config").get<std::string>()));
  tiersim::CostModel cost;
  if (j.contains("cost_model"))
    cost = tiersim::load_cost_model(resolve(j.at("cost_model").get<std::string>()));
  tiersim::DeviceFleet fleet;
  if (j.contains("hdd_count")) fleet.hdd_count = j.at("hdd_count").get<std::uint32_t>();
  if (j.contains("ssd_capacity_tb")) fleet.ssd_capacity_tb = j.at("ssd_capacity_tb").get<double>();

  if (!j.contains("policies") || !j.at("policies").is_array() || j.at("policies").empty())
    throw tiersim::validation_error("experiment spec: 'policies' must be a non-empty array");
  std::vector<tiersim::PolicyKind> policies;
  bool needs_model = false;
  for (const auto& p : j.at("policies")) {
    policies.push_back(tiersim::policy_from_string(p.get<std::string>()));
    needs_model = needs_model || tiersim::policy_needs_model(policies.back());
  }
  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty())
    throw tiersim::validation_error("experiment spec: 'seeds' must be a non-empty array");
  std::vector<std::uint64_t> seeds;
  for (const auto& s : j.at("seeds")) seeds.push_back(s.get<std::uint64_t>());

  const fs::path out_dir = j.contains("out_dir") ? fs::path(j.at("out_dir").get<std::string>())
                                                 : fs::path(".");

  std::vector<tiersim::MetricsReport> rows;
  for (const std::uint64_t seed : seeds) {
    tiersim::GeneratorConfig seeded = cfg;
    seeded.seed = seed;
    const tiersim::Trace trace = tiersim::generate(seeded);
    std::optional<tiersim::ModelStore> store;
    if (needs_model) store = tiersim::train(trace);
    for (const tiersim::PolicyKind p : policies)
      rows.push_back(
          tiersim::run_simulation(trace, p, fleet, cost, store ? &*store : nullptr, seed));
  }
  const fs::path out_path = out_dir / "sweep.csv";
  write_file(out_path, tiersim::sweep_csv(std::move(rows)));
  std::cout << "wrote " << out_path.string() << ": " << policies.size() * seeds.size()
            << " rows\n";
}

struct ReportArgs {
  std::string trace_path;
  std::string cost_model_path;
  std::string out_dir;
  std::string format = "csv";
};

void cmd_report(const ReportArgs& a) {
  const tiersim::Trace trace = tiersim::load_trace(a.trace_path);
  tiersim::CostModel cost;
  if (!a.cost_model_path.empty()) cost = tiersim::load_cost_model(a.cost_model_path);
  const tiersim::ScatterSummary summary = tiersim::summarize_scatter(trace, cost);

  std::cout << "cost model: hdd_iops_cap=" << fmt(cost.hdd_iops_cap)
            << " hdd_capacity_tb=" << fmt(cost.hdd_capacity_tb) << " tco_hdd=" << fmt(cost.tco_hdd)
            << " tco_ssd_per_tb=" << fmt(cost.tco_ssd_per_tb) << "\n";
  std::cout << "crossover: " << fmt(summary.crossover) << " IOPS/TB\n";
  std::cout << "shuffle aggregates: " << summary.points.size()
            << ", above crossover: " << fmt(summary.above_fraction) << "\n";

  const fs::path dir(a.out_dir);
  const fs::path svg_path = dir / "scatter.svg";
  write_file(svg_path, tiersim::scatter_svg(summary));
  std::cout << "wrote " << svg_path.string() << "\n";
  const fs::path sum_path = dir / (a.format == "json" ? "summary.json" : "summary.csv");
  if (a.format == "json")
    write_file(sum_path, tiersim::scatter_json(summary).dump(2) + "\n");
  else
    write_file(sum_path, tiersim::scatter_csv(summary));
  std::cout << "wrote " << sum_path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tiered-storage placement simulator"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* cgen = app.add_subcommand("gen", "generate a synthetic trace");
  cgen->add_option("--config", gen.config_path, "generator config JSON (defaults when omitted)");
  cgen->add_option("--seed", gen.seed, "override the config seed");
  cgen->add_option("--out", gen.out_path, "output trace path (JSONL)")->required();

  TrainArgs train;
  CLI::App* ctrain = app.add_subcommand("train", "fit the predictor on a trace");
  ctrain->add_option("--trace", train.trace_path, "training trace (JSONL)")->required();
  ctrain->add_option("--out", train.out_path, "output model path (JSON)")->required();
  ctrain->add_option("--min-samples", train.min_samples,
                     "samples a key needs before it is trusted");

  SimArgs sim;
  CLI::App* csim = app.add_subcommand("simulate", "replay a trace under one policy");
  csim->add_option("--trace", sim.trace_path, "trace to replay (JSONL)")->required();
  csim->add_option("--policy", sim.policy,
                   "all-hdd | all-ssd | oracle | predicted | capacity-score")
      ->required();
  csim->add_option("--model", sim.model_path, "trained model (needed by predicted/capacity-score)");
  csim->add_option("--cost-model", sim.cost_model_path, "cost model JSON (defaults when omitted)");
  csim->add_option("--ssd-capacity-tb", sim.ssd_capacity_tb, "SSD pool size in TB");
  csim->add_option("--hdd-count", sim.hdd_count, "number of HDDs in the fleet");
  csim->add_option("--seed", sim.seed, "seed label recorded in the report");
  csim->add_option("--out", sim.out_path, "report path (stdout when omitted)");
  csim->add_option("--format", sim.format, "report format")
      ->check(CLI::IsMember({"csv", "json"}));

  SweepArgs sweep;
  CLI::App* csweep = app.add_subcommand("sweep", "run a policy x seed grid from a spec file");
  csweep->add_option("--spec", sweep.spec_path, "experiment spec JSON")->required();

  ReportArgs report;
  CLI::App* creport = app.add_subcommand("report", "density scatter and summary for a trace");
  creport->add_option("--trace", report.trace_path, "trace to summarize (JSONL)")->required();
  creport->add_option("--cost-model", report.cost_model_path,
                      "cost model JSON (defaults when omitted)");
  creport->add_option("--out", report.out_dir, "output directory")->required();
  creport->add_option("--format", report.format, "summary format")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
    if (cgen->parsed()) cmd_gen(gen);
    if (ctrain->parsed()) cmd_train(train);
    if (csim->parsed()) cmd_simulate(sim);
    if (csweep->parsed()) cmd_sweep(sweep);
    if (creport->parsed()) cmd_report(report);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const usage_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tiersim::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const tiersim::parse_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tiersim::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
