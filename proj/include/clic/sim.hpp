#pragma once

// Scenario engine for the simulation studies: data generation under
// true / perturbed / misspecified laws, repeated fitting of candidate models
// under the full and composite likelihoods, criterion decisions, and
// cross-tabulated summaries.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clic/models.hpp"
#include "clic/select.hpp"
#include "clic/toml.hpp"

namespace clic::sim {

struct CandidateSpec {
  std::string family;     // "exch" | "unstr" | "lmm"
  int n_covariates = -1;  // -1: use all generated covariates
  std::string label() const;
};

struct ScenarioConfig {
  std::string id = "scenario";
  int n = 100, d = 4;
  int replicates = 200;
  std::uint64_t seed = 1;

  // truth
  Vector beta_true;
  std::string sigma_name = "exchangeable";  // or Sigma1..Sigma2a, SigmaDelta
  double delta = 0.0;
  std::string delta_rule;  // "", "n-1/2", "sqrt-logn-n"
  double sigma2 = 1.0, rho = 0.5;
  std::string effect_law = "normal";  // normal | laplace | scaled-t
  int t_df = 3;
  bool standardize_t = false;
  Vector mean_shift;
  std::string covariates = "iid-normal";
  int n_covariates = 1;

  std::vector<CandidateSpec> candidates;
  std::vector<std::string> criteria;    // aic, bic, claic, clbic
  std::vector<std::string> cl_schemes;  // bcl and/or tcl (claic/clbic variants)
  std::vector<std::pair<std::string, std::string>> crosstabs;

  select::PenaltyMode penalty_mode = select::PenaltyMode::ExpectedAtFit;
  bool classical_full_penalty = true;  // AIC/BIC with penalty = p

  double resolved_delta() const;
  models::TrueLaw build_truth() const;
  void validate() const;
};

ScenarioConfig scenario_from_toml(const io::TomlTable& t);
ScenarioConfig load_scenario(const std::string& path);

struct ReplicateRecord {
  int replicate = 0;
  std::string criterion;  // e.g. "claic@bcl"
  int decision = 0;       // candidate index
  std::vector<double> penalty;  // per candidate (criterion's scheme)
  std::vector<double> log_cl;
};

struct DecisionTable {
  std::vector<std::string> candidate_names;
  std::vector<std::string> criterion_keys;  // e.g. "aic", "claic@bcl"
  std::map<std::string, std::vector<int>> frequency;  // key -> per-candidate
  std::map<std::string, Matrix> crosstab;  // "a|b" -> counts (rows a, cols b)
  // penalties per scheme key ("full", "bcl", "tcl") per candidate,
  // one value per successful replicate
  std::map<std::string, std::vector<std::vector<double>>> penalties;
  int replicates_requested = 0;
  int replicates_used = 0;
  int failures = 0;
  std::vector<ReplicateRecord> records;
};

DecisionTable run_scenario(const ScenarioConfig& cfg);

struct Agreement {
  double rate = 0.0;       // diagonal fraction
  double asymmetry = 0.0;  // (below-diagonal - above-diagonal) / total:
                           // positive when the row criterion picks bigger
                           // models more often than the column criterion
};

Agreement agreement_stats(const Matrix& crosstab);

// Empirical quartiles with linear interpolation between order statistics
// (the common type-7 convention).
std::pair<double, double> penalty_quartiles(const std::vector<double>& values);
double quantile(std::vector<double> values, double p);

void write_results_csv(const std::string& path, const ScenarioConfig& cfg,
                       const DecisionTable& table);
void write_summary_csv(const std::string& path, const ScenarioConfig& cfg,
                       const DecisionTable& table);

}  // namespace clic::sim
