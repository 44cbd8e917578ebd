#pragma once

// Device economics. A file parked on HDD is billed for whichever resource
// it exhausts first — spindle IOPS or platter bytes — while SSD bills by
// bytes alone. Equating the two yields the break-even I/O density that
// splits SSD-worthy files from HDD-worthy ones.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "tiersim/trace.hpp"

namespace tiersim {

struct CostModel {
  double hdd_iops_cap = 150.0;     // IOPS one spindle sustains
  double hdd_capacity_tb = 10.0;   // TB per drive
  double tco_hdd = 1.0;            // cost units per drive
  double tco_ssd_per_tb = 1.0;     // cost units per TB of flash
  bool operator==(const CostModel&) const = default;
};

inline void validate(const CostModel& m) {
  auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!pos(m.hdd_iops_cap)) throw validation_error("cost model: hdd_iops_cap must be > 0");
  if (!pos(m.hdd_capacity_tb)) throw validation_error("cost model: hdd_capacity_tb must be > 0");
  if (!pos(m.tco_hdd)) throw validation_error("cost model: tco_hdd must be > 0");
  if (!pos(m.tco_ssd_per_tb)) throw validation_error("cost model: tco_ssd_per_tb must be > 0");
}

// SSD-to-HDD cost ratio per stored TB (10x under defaults).
inline double per_tb_cost_ratio(const CostModel& m) {
  return m.tco_ssd_per_tb * m.hdd_capacity_tb / m.tco_hdd;
}

// Density above which buying spindles for IOPS costs more than buying
// flash for the same bytes. 150 IOPS/TB under defaults.
inline double crossover_density(const CostModel& m) {
  return m.hdd_iops_cap * m.tco_ssd_per_tb / m.tco_hdd;
}

// Drives needed to host the file, fractional: bytes or IOPS, whichever
// dominates.
inline double cost_on_hdd(const TempFileRecord& f, const CostModel& m) {
  const double by_bytes = size_tb(f.size_bytes) / m.hdd_capacity_tb;
  const double by_iops = avg_iops(f) / m.hdd_iops_cap;
  return m.tco_hdd * std::max(by_bytes, by_iops);
}

inline double cost_on_ssd(const TempFileRecord& f, const CostModel& m) {
  return m.tco_ssd_per_tb * size_tb(f.size_bytes);
}

enum class Tier { ssd, hdd };

inline std::string_view to_string(Tier t) { return t == Tier::ssd ? "ssd" : "hdd"; }

// Cheapest tier given the file's actual behavior; the break-even point
// itself goes to HDD.
inline Tier oracle_tier(const TempFileRecord& f, const CostModel& m) {
  return io_density(f) > crossover_density(m) ? Tier::ssd : Tier::hdd;
}

inline ojson to_json(const CostModel& m) {
  return ojson{{"hdd_iops_cap", m.hdd_iops_cap},
               {"hdd_capacity_tb", m.hdd_capacity_tb},
               {"tco_hdd", m.tco_hdd},
               {"tco_ssd_per_tb", m.tco_ssd_per_tb}};
}

inline CostModel cost_model_from_json(const ojson& j) {
  CostModel m;
  if (j.contains("hdd_iops_cap")) m.hdd_iops_cap = j.at("hdd_iops_cap").get<double>();
  if (j.contains("hdd_capacity_tb")) m.hdd_capacity_tb = j.at("hdd_capacity_tb").get<double>();
  if (j.contains("tco_hdd")) m.tco_hdd = j.at("tco_hdd").get<double>();
  if (j.contains("tco_ssd_per_tb")) m.tco_ssd_per_tb = j.at("tco_ssd_per_tb").get<double>();
  validate(m);
  return m;
}

inline CostModel load_cost_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path.string() + ": " + e.what());
  }
  return cost_model_from_json(j);
}

}  // namespace tiersim
