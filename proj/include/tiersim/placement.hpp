#pragma once

// Placement policies. The interesting one is capacity-score: files are
// ranked by expected IOPS per TB, and a newcomer may displace lower-score
// residents when that strictly raises the IOPS the SSD absorbs.

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tiersim/econ.hpp"
#include "tiersim/predictor.hpp"
#include "tiersim/trace.hpp"

namespace tiersim {

enum class PolicyKind { all_hdd, all_ssd, oracle_threshold, predicted_threshold, capacity_score };

inline constexpr std::string_view kPolicyNames[] = {"all-hdd", "all-ssd", "oracle", "predicted",
                                                    "capacity-score"};

inline std::string_view to_string(PolicyKind p) {
  return kPolicyNames[static_cast<int>(p)];
}

inline PolicyKind policy_from_string(std::string_view name) {
  if (name == "all-hdd") return PolicyKind::all_hdd;
  if (name == "all-ssd") return PolicyKind::all_ssd;
  if (name == "oracle") return PolicyKind::oracle_threshold;
  if (name == "predicted") return PolicyKind::predicted_threshold;
  if (name == "capacity-score") return PolicyKind::capacity_score;
  throw validation_error("unknown policy '" + std::string(name) +
                         "' (valid: all-hdd, all-ssd, oracle, predicted, capacity-score)");
}

inline bool policy_needs_model(PolicyKind p) {
  return p == PolicyKind::predicted_threshold || p == PolicyKind::capacity_score;
}

// Expected IOPS per TB — the admission score.
inline double score(const Prediction& p) {
  return p.predicted_avg_iops / (p.predicted_size_bytes / kBytesPerTb);
}

struct ResidentFile {
  std::uint64_t file_id = 0;
  double size_tb = 0.0;
  double score = 0.0;
};

class SsdState {
 public:
  explicit SsdState(double capacity_tb) : capacity_tb_(capacity_tb) {
    if (!(std::isfinite(capacity_tb) && capacity_tb >= 0.0))
      throw validation_error("ssd capacity_tb must be >= 0");
  }

  double capacity_tb() const { return capacity_tb_; }
  double used_tb() const { return used_tb_; }
  double free_tb() const { return capacity_tb_ - used_tb_; }
  std::size_t resident_count() const { return by_id_.size(); }
  bool contains(std::uint64_t file_id) const { return by_id_.count(file_id) != 0; }

  // descending score, ties broken by ascending file_id
  std::vector<ResidentFile> residents() const {
    return {ordered_.begin(), ordered_.end()};
  }

  // sum over residents of score * size — the IOPS the SSD is expected to
  // absorb
  double resident_iops() const {
    double total = 0.0;
    for (const auto& r : ordered_) total += r.score * r.size_tb;
    return total;
  }

  bool admit(const ResidentFile& f) {
    if (contains(f.file_id)) return false;
    auto [it, ok] = ordered_.insert(f);
    if (!ok) return false;
    by_id_.emplace(f.file_id, it);
    used_tb_ += f.size_tb;
    return true;
  }

  bool remove(std::uint64_t file_id) {
    auto it = by_id_.find(file_id);
    if (it == by_id_.end()) return false;
    used_tb_ -= it->second->size_tb;
    ordered_.erase(it->second);
    by_id_.erase(it);
    if (ordered_.empty()) used_tb_ = 0.0;  // shed accumulated float dust
    return true;
  }

 private:
  struct ByScore {
    bool operator()(const ResidentFile& a, const ResidentFile& b) const {
      if (a.score != b.score) return a.score > b.score;
      return a.file_id < b.file_id;
    }
  };
  using Ordered = std::set<ResidentFile, ByScore>;

  double capacity_tb_ = 0.0;
  double used_tb_ = 0.0;
  Ordered ordered_;
  std::unordered_map<std::uint64_t, Ordered::iterator> by_id_;
};

struct PlacementDecision {
  Tier tier = Tier::hdd;
  std::vector<std::uint64_t> evictions;  // residents pushed to HDD, lowest score first
  double score = 0.0;                    // IOPS/TB the decision was based on
};

struct FileContext {
  std::uint64_t file_id = 0;
  double size_tb = 0.0;  // bytes the file will actually occupy
};

namespace placedetail {

inline PlacementDecision admit_simple(SsdState& state, const FileContext& ctx, double score_val,
                                      bool want_ssd) {
  PlacementDecision d;
  d.score = score_val;
  if (want_ssd && ctx.size_tb <= state.free_tb()) {
    state.admit({ctx.file_id, ctx.size_tb, score_val});
    d.tier = Tier::ssd;
  }
  return d;
}

}  // namespace placedetail

// Applies the policy and mutates `state` accordingly. `prediction` is
// required for the model-driven policies, `truth` for the oracle.
inline PlacementDecision decide(PolicyKind policy, const FileContext& ctx,
                                const Prediction* prediction, const TempFileRecord* truth,
                                SsdState& state, const CostModel& model) {
  switch (policy) {
    case PolicyKind::all_hdd:
      return PlacementDecision{};

    case PolicyKind::all_ssd:
      return placedetail::admit_simple(state, ctx, 0.0, true);

    case PolicyKind::oracle_threshold: {
      if (truth == nullptr)
        throw validation_error("oracle policy needs the file's actual record");
      return placedetail::admit_simple(state, ctx, io_density(*truth),
                                       oracle_tier(*truth, model) == Tier::ssd);
    }

    case PolicyKind::predicted_threshold: {
      if (prediction == nullptr)
        throw validation_error("predicted policy needs a prediction");
      const double s = score(*prediction);
      return placedetail::admit_simple(state, ctx, s, s > crossover_density(model));
    }

    case PolicyKind::capacity_score: {
      if (prediction == nullptr)
        throw validation_error("capacity-score policy needs a prediction");
      const double s = score(*prediction);
      PlacementDecision d;
      d.score = s;
      if (!(s > crossover_density(model))) return d;  // not SSD-worthy at any capacity
      if (ctx.size_tb <= state.free_tb()) {
        state.admit({ctx.file_id, ctx.size_tb, s});
        d.tier = Tier::ssd;
        return d;
      }
      // Walk residents from the lowest score up, collecting strictly
      // weaker files until the newcomer fits.
      const auto residents = state.residents();
      double freed = 0.0;
      double evicted_iops = 0.0;
      std::vector<const ResidentFile*> victims;
      for (auto it = residents.rbegin(); it != residents.rend(); ++it) {
        if (ctx.size_tb <= state.free_tb() + freed) break;
        if (!(it->score < s)) break;  // never displace an equal or better file
        victims.push_back(&*it);
        freed += it->size_tb;
        evicted_iops += it->score * it->size_tb;
      }
      const bool fits = ctx.size_tb <= state.free_tb() + freed;
      const bool improves = s * ctx.size_tb > evicted_iops;
      if (fits && improves) {
        for (const auto* v : victims) {
          d.evictions.push_back(v->file_id);
          state.remove(v->file_id);
        }
        state.admit({ctx.file_id, ctx.size_tb, s});
        d.tier = Tier::ssd;
      }
      return d;
    }
  }
  return PlacementDecision{};
}

// Deletion hook; unknown ids are a no-op.
inline void release(SsdState& state, std::uint64_t file_id) { state.remove(file_id); }

}  // namespace tiersim
