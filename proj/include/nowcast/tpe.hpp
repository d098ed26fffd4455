#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nowcast/rng.hpp"

namespace nowcast {

// One hyperparameter domain: real interval (optionally log-scaled), integer
// interval, or categorical set.
struct ParamDomain {
  enum class Kind { kReal, kInt, kCategorical } kind = Kind::kReal;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;
  std::vector<std::string> options;

  static ParamDomain real(double lo, double hi, bool log_scale = false);
  static ParamDomain integer(std::int64_t lo, std::int64_t hi);
  static ParamDomain categorical(std::vector<std::string> options);
};

using ParamValue = std::variant<double, std::int64_t, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

double param_real(const ParamMap& params, const std::string& name);
std::int64_t param_int(const ParamMap& params, const std::string& name);
const std::string& param_cat(const ParamMap& params, const std::string& name);

struct SearchSpace {
  std::map<std::string, ParamDomain> parameters;

  void validate() const;
  bool empty() const { return parameters.empty(); }
};

enum class TrialStatus { kComplete, kPruned, kFailed };

struct TrialRecord {
  ParamMap params;
  std::vector<std::pair<int, double>> intermediate_losses;  // (epoch, loss)
  std::optional<double> final_loss;                         // present iff complete
  TrialStatus status = TrialStatus::kFailed;
};

struct StudyState {
  std::vector<TrialRecord> trials;
  double gamma_fraction = 0.10;
  int n_trials = 60;
  int n_startup = 10;
  int n_candidates = 24;  // draws from the good-density per suggestion
  std::uint64_t seed = 42;

  int completed_count() const;
  std::optional<std::size_t> best_trial() const;  // argmin final loss
};

// Next parameter assignment. Uniform during warm-up; afterwards the completed
// trials are split at the gamma-quantile of final loss, per-dimension Parzen
// densities l and g are fit over the good and bad sets, and the candidate
// maximizing l/g among n_candidates draws from l is returned.
ParamMap suggest(const StudyState& study, const SearchSpace& space, Rng& rng);

// True iff at least n_startup trials completed and `loss` exceeds the median
// of completed trials' losses recorded at the same epoch.
bool should_prune(const StudyState& study, int epoch, double loss);

// Handed to the objective for intermediate reporting; report() returns false
// when the pruner wants the trial stopped.
class TrialContext {
 public:
  TrialContext(const StudyState& study, TrialRecord& record)
      : study_(study), record_(record) {}

  bool report(int epoch, double loss);
  bool pruned() const { return pruned_; }

 private:
  const StudyState& study_;
  TrialRecord& record_;
  bool pruned_ = false;
};

using Objective = std::function<double(const ParamMap&, TrialContext&)>;

struct OptimizeResult {
  ParamMap best_params;
  double best_loss = 0.0;
  StudyState study;
};

// Runs `study.n_trials` trials of the objective; deterministic given the
// study seed. Throws when every trial failed.
OptimizeResult optimize(const Objective& objective, const SearchSpace& space, StudyState study);

// JSON round-trip for resume/audit.
std::string study_to_json(const StudyState& study);
StudyState study_from_json(const std::string& text);

}  // namespace nowcast
