#include "clic/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "clic/csv.hpp"
#include "clic/fit.hpp"

namespace clic::sim {

std::string CandidateSpec::label() const {
  if (n_covariates >= 0)
    return family + "-x" + std::to_string(n_covariates);
  return family;
}

double ScenarioConfig::resolved_delta() const {
  if (delta_rule.empty()) return delta;
  if (delta_rule == "n-1/2") return 1.0 / std::sqrt(static_cast<double>(n));
  if (delta_rule == "sqrt-logn-n")
    return std::sqrt(std::log(static_cast<double>(n)) / n);
  throw std::invalid_argument("unknown delta rule: " + delta_rule);
}

models::TrueLaw ScenarioConfig::build_truth() const {
  models::EffectLaw elaw = models::EffectLaw::Normal;
  if (effect_law == "laplace") elaw = models::EffectLaw::Laplace;
  else if (effect_law == "scaled-t") elaw = models::EffectLaw::ScaledT;
  else if (effect_law != "normal")
    throw std::invalid_argument("unknown effect law: " + effect_law);

  models::TrueLaw law;
  if (sigma_name == "exchangeable") {
    law = models::TrueLaw::exchangeable(beta_true, sigma2, rho, d);
  } else {
    // Sigma schedules: the exchangeable component z b carries the
    // random-effect law; correlation perturbations go to the residual part.
    const Matrix sigma = models::sigma_schedule(
        models::sigma_kind_from(sigma_name), n, d, resolved_delta());
    const double off = 0.5;  // exchangeable base correlation of the schedules
    law.beta = beta_true;
    law.z = Matrix::Ones(d, 1);
    law.psi = Matrix::Constant(1, 1, off);
    law.resid_cov = sigma - off * Matrix::Ones(d, d);
    Eigen::LLT<Matrix> llt(law.resid_cov);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument(
          "scenario: residual part of the schedule is not PD");
  }
  law.effect_law = elaw;
  law.t_df = t_df;
  law.standardize_t = standardize_t;
  law.mean_shift = mean_shift;
  return law;
}

void ScenarioConfig::validate() const {
  if (replicates < 1) throw std::invalid_argument("scenario: replicates >= 1");
  if (n < 2 || d < 2) throw std::invalid_argument("scenario: need n >= 2, d >= 2");
  if (candidates.empty()) throw std::invalid_argument("scenario: no candidates");
  if (criteria.empty()) throw std::invalid_argument("scenario: no criteria");
  if (beta_true.size() < 1)
    throw std::invalid_argument("scenario: missing true beta");
  const std::set<std::string> known_crit{"aic", "bic", "claic", "clbic"};
  bool needs_cl = false;
  for (const auto& c : criteria) {
    if (!known_crit.count(c))
      throw std::invalid_argument("scenario: unknown criterion " + c);
    if (c == "claic" || c == "clbic") needs_cl = true;
  }
  if (needs_cl && cl_schemes.empty())
    throw std::invalid_argument(
        "scenario: claic/clbic requested but no cl_schemes given");
  for (const auto& s : cl_schemes)
    if (s != "bcl" && s != "tcl")
      throw std::invalid_argument("scenario: cl_schemes entries must be bcl or tcl");
  build_truth().validate();
}

ScenarioConfig scenario_from_toml(const io::TomlTable& root) {
  ScenarioConfig cfg;
  const io::TomlTable& sc = root.table("scenario");
  cfg.id = sc.get_string("id", "scenario");
  cfg.n = static_cast<int>(sc.get_int("n"));
  cfg.d = static_cast<int>(sc.get_int("d", 4));
  cfg.replicates = static_cast<int>(sc.get_int("replicates", 200));
  cfg.seed = static_cast<std::uint64_t>(sc.get_int("seed", 1));
  cfg.criteria = sc.get_strings("criteria");
  if (sc.has("cl_schemes")) cfg.cl_schemes = sc.get_strings("cl_schemes");
  cfg.penalty_mode =
      select::penalty_mode_from(sc.get_string("penalty_mode", "expected"));
  cfg.classical_full_penalty = sc.get_bool("classical_full_penalty", true);

  const io::TomlTable& tr = root.table("truth");
  {
    const auto b = tr.get_doubles("beta");
    cfg.beta_true = Eigen::Map<const Vector>(b.data(), b.size());
  }
  cfg.sigma_name = tr.get_string("sigma", "exchangeable");
  cfg.delta = tr.get_double("delta", 0.0);
  cfg.delta_rule = tr.get_string("delta_rule", "");
  cfg.sigma2 = tr.get_double("sigma2", 1.0);
  cfg.rho = tr.get_double("rho", 0.5);
  cfg.effect_law = tr.get_string("effect_law", "normal");
  cfg.t_df = static_cast<int>(tr.get_int("t_df", 3));
  cfg.standardize_t = tr.get_bool("standardize_t", false);
  if (tr.has("mean_shift")) {
    const auto ms = tr.get_doubles("mean_shift");
    cfg.mean_shift = Eigen::Map<const Vector>(ms.data(), ms.size());
  }
  cfg.covariates = tr.get_string("covariates", "iid-normal");
  cfg.n_covariates = static_cast<int>(tr.get_int("n_covariates", 1));

  for (const auto& c : root.table_array("candidate")) {
    CandidateSpec cand;
    cand.family = c.get_string("family");
    cand.n_covariates = static_cast<int>(c.get_int("n_covariates", -1));
    cfg.candidates.push_back(cand);
  }
  if (root.has_table_array("crosstab")) {
    for (const auto& c : root.table_array("crosstab"))
      cfg.crosstabs.emplace_back(c.get_string("a"), c.get_string("b"));
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  return scenario_from_toml(io::parse_toml_file(path));
}

namespace {

struct CritKey {
  std::string name;    // aic | bic | claic | clbic
  std::string scheme;  // full | bcl | tcl
  std::string key() const {
    return (scheme == "full") ? name : name + "@" + scheme;
  }
  bool bic_like() const { return name == "bic" || name == "clbic"; }
};

}  // namespace

DecisionTable run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const models::TrueLaw truth = cfg.build_truth();
  const auto cov_setting = models::covariate_setting_from(cfg.covariates);
  const int k = static_cast<int>(cfg.candidates.size());

  // criterion instances and the schemes they need
  std::vector<CritKey> crits;
  std::vector<std::string> schemes_needed;
  for (const auto& c : cfg.criteria) {
    if (c == "aic" || c == "bic") {
      crits.push_back({c, "full"});
      if (std::find(schemes_needed.begin(), schemes_needed.end(), "full") ==
          schemes_needed.end())
        schemes_needed.push_back("full");
    } else {
      for (const auto& s : cfg.cl_schemes) {
        crits.push_back({c, s});
        if (std::find(schemes_needed.begin(), schemes_needed.end(), s) ==
            schemes_needed.end())
          schemes_needed.push_back(s);
      }
    }
  }

  DecisionTable table;
  table.replicates_requested = cfg.replicates;
  for (const auto& cand : cfg.candidates)
    table.candidate_names.push_back(cand.label());
  for (const auto& ck : crits) {
    table.criterion_keys.push_back(ck.key());
    table.frequency[ck.key()] = std::vector<int>(k, 0);
  }
  for (const auto& [a, b] : cfg.crosstabs)
    table.crosstab[a + "|" + b] = Matrix::Zero(k, k);
  for (const auto& s : schemes_needed)
    table.penalties[s] = std::vector<std::vector<double>>(k);

  // families are stateless given (family name, d); build once
  std::vector<std::unique_ptr<cl::GaussianFamily>> fams;
  for (const auto& cand : cfg.candidates)
    fams.push_back(cl::make_family(cand.family, cfg.d,
                                   Matrix::Ones(cfg.d, 1)));

  Rng root(cfg.seed);
  for (int rep = 0; rep < cfg.replicates; ++rep) {
    const Rng rep_stream = root.stream(0x5EED, static_cast<std::uint64_t>(rep));
    const models::DesignSet designs = models::make_covariates(
        cov_setting, cfg.n, cfg.d, cfg.n_covariates, rep_stream.stream(1),
        cfg.t_df);
    const std::vector<Vector> y =
        models::simulate(truth, designs, rep_stream.stream(2));

    // fit every candidate under every needed scheme
    bool failed = false;
    std::map<std::string, std::vector<cl::GodambeEstimate>> fits;
    for (const auto& sname : schemes_needed) {
      const cl::MarginScheme scheme = cl::MarginScheme::named(sname, cfg.d);
      std::vector<cl::GodambeEstimate> row;
      for (int c = 0; c < k && !failed; ++c) {
        const models::DesignSet dsub =
            cfg.candidates[c].n_covariates >= 0
                ? designs.first_covariates(cfg.candidates[c].n_covariates)
                : designs;
        cl::FitOptions fopts;
        fopts.compute_observed =
            (cfg.penalty_mode == select::PenaltyMode::Empirical);
        try {
          row.push_back(cl::fit(*fams[c], scheme, dsub, y, fopts));
        } catch (const NumericalError&) {
          failed = true;
        }
      }
      if (failed) break;
      fits[sname] = std::move(row);
    }
    if (failed) {
      ++table.failures;
      continue;
    }
    ++table.replicates_used;

    for (const auto& sname : schemes_needed)
      for (int c = 0; c < k; ++c)
        table.penalties[sname][c].push_back(
            cfg.penalty_mode == select::PenaltyMode::Empirical
                ? fits[sname][c].penalty_empirical
                : fits[sname][c].penalty);

    std::map<std::string, int> decision;
    for (const auto& ck : crits) {
      const auto& frow = fits[ck.scheme];
      select::PenaltyMode mode = cfg.penalty_mode;
      if (ck.scheme == "full" && cfg.classical_full_penalty)
        mode = select::PenaltyMode::ClassicalP;
      const auto rep_crit = select::criteria(frow, cfg.n, mode);
      const int choice =
          ck.bic_like() ? rep_crit.clbic_choice : rep_crit.claic_choice;
      decision[ck.key()] = choice;
      table.frequency[ck.key()][choice] += 1;

      ReplicateRecord rec;
      rec.replicate = rep;
      rec.criterion = ck.key();
      rec.decision = choice;
      for (int c = 0; c < k; ++c) {
        rec.penalty.push_back(rep_crit.penalty[c]);
        rec.log_cl.push_back(rep_crit.log_cl[c]);
      }
      table.records.push_back(std::move(rec));
    }
    for (const auto& [a, b] : cfg.crosstabs) {
      const auto ia = decision.find(a), ib = decision.find(b);
      if (ia == decision.end() || ib == decision.end())
        throw std::invalid_argument("crosstab references unknown criterion: " +
                                    a + "|" + b);
      table.crosstab[a + "|" + b](ia->second, ib->second) += 1.0;
    }
  }
  return table;
}

Agreement agreement_stats(const Matrix& crosstab) {
  if (crosstab.rows() != crosstab.cols())
    throw std::invalid_argument("agreement_stats: table must be square");
  const double total = crosstab.sum();
  Agreement a;
  if (total == 0.0) return a;
  a.rate = crosstab.diagonal().sum() / total;
  double below = 0.0, above = 0.0;
  for (int i = 0; i < crosstab.rows(); ++i)
    for (int j = 0; j < crosstab.cols(); ++j) {
      if (i > j) below += crosstab(i, j);
      if (i < j) above += crosstab(i, j);
    }
  a.asymmetry = (below - above) / total;
  return a;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

std::pair<double, double> penalty_quartiles(const std::vector<double>& v) {
  if (v.size() < 4)
    throw std::invalid_argument("penalty_quartiles: need at least 4 values");
  return {quantile(v, 0.25), quantile(v, 0.75)};
}

void write_results_csv(const std::string& path, const ScenarioConfig& cfg,
                       const DecisionTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write results CSV: " + path);
  out << "scenario_id,replicate,criterion,decision";
  for (const auto& name : table.candidate_names)
    out << ",penalty_" << name << ",logcl_" << name;
  out << "\n";
  for (const auto& rec : table.records) {
    out << cfg.id << "," << rec.replicate << "," << rec.criterion << ","
        << table.candidate_names[rec.decision];
    for (std::size_t c = 0; c < rec.penalty.size(); ++c)
      out << "," << io::format_double(rec.penalty[c]) << ","
          << io::format_double(rec.log_cl[c]);
    out << "\n";
  }
}

void write_summary_csv(const std::string& path, const ScenarioConfig& cfg,
                       const DecisionTable& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write summary CSV: " + path);
  out << "scenario_id,section,key";
  for (const auto& name : table.candidate_names) out << "," << name;
  out << "\n";
  out << cfg.id << ",meta,replicates_used";
  for (std::size_t c = 0; c < table.candidate_names.size(); ++c)
    out << "," << (c == 0 ? std::to_string(table.replicates_used) : "");
  out << "\n";
  out << cfg.id << ",meta,failures";
  for (std::size_t c = 0; c < table.candidate_names.size(); ++c)
    out << "," << (c == 0 ? std::to_string(table.failures) : "");
  out << "\n";
  for (const auto& key : table.criterion_keys) {
    out << cfg.id << ",frequency," << key;
    for (int v : table.frequency.at(key)) out << "," << v;
    out << "\n";
  }
  for (const auto& [key, tab] : table.crosstab) {
    for (int i = 0; i < tab.rows(); ++i) {
      out << cfg.id << ",crosstab:" << key << ","
          << table.candidate_names[i];
      for (int j = 0; j < tab.cols(); ++j)
        out << "," << static_cast<long>(tab(i, j));
      out << "\n";
    }
  }
  for (const auto& [scheme, per_cand] : table.penalties) {
    for (const char* which : {"q1", "q3"}) {
      out << cfg.id << ",penalty_" << which << "," << scheme;
      for (const auto& vals : per_cand) {
        if (vals.size() >= 4) {
          const auto [q1, q3] = penalty_quartiles(vals);
          out << ","
              << io::format_double(std::string(which) == "q1" ? q1 : q3);
        } else {
          out << ",";
        }
      }
      out << "\n";
    }
  }
}

}  // namespace clic::sim
