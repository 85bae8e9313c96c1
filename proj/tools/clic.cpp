// clic: composite-likelihood inference and model selection for Gaussian
// clustered data.  Subcommands: fit, select, simulate, qfprob, eigen,
// jackknife, spruce.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "clic/csv.hpp"
#include "clic/jackknife.hpp"
#include "clic/qfdist.hpp"
#include "clic/select.hpp"
#include "clic/sim.hpp"
#include "clic/spruce.hpp"

using json = nlohmann::json;
using namespace clic;

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const int r = static_cast<int>(j.size());
  if (r == 0) return Matrix(0, 0);
  const int c = static_cast<int>(j.at(0).size());
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < c; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

Vector parse_number_list(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) vals.push_back(io::to_double(tok, what));
  if (vals.empty()) throw std::invalid_argument(what + ": empty list");
  return Eigen::Map<Vector>(vals.data(), vals.size());
}

json fit_to_json(const cl::GodambeEstimate& est,
                 const cl::GaussianFamily& family) {
  json out;
  out["family"] = est.family;
  out["scheme"] = est.scheme;
  out["n"] = est.n;
  out["n_beta"] = est.n_beta;
  out["log_cl"] = est.log_cl;
  out["penalty"] = est.penalty;
  out["penalty_empirical"] = est.penalty_empirical;
  out["iterations"] = est.iterations;
  out["boundary"] = est.boundary;
  out["theta"] = std::vector<double>(est.theta.data(),
                                     est.theta.data() + est.theta.size());
  out["h_expected"] = matrix_to_json(est.h_expected);
  out["j_expected"] = matrix_to_json(est.j_expected);
  if (est.h_observed.size() > 0) {
    out["h_observed"] = matrix_to_json(est.h_observed);
    out["j_empirical"] = matrix_to_json(est.j_empirical);
  }
  json nat = json::object();
  for (const auto& [k, v] :
       family.natural_params(est.theta.tail(est.theta.size() - est.n_beta)))
    nat[k] = v;
  out["natural"] = nat;
  return out;
}

struct FitArgs {
  std::string data_path, family = "exch", scheme = "bcl", out_path;
  bool summary = true;
};

cl::GodambeEstimate run_fit(const FitArgs& a, io::LongData* data_out,
                            std::unique_ptr<cl::GaussianFamily>* fam_out) {
  io::LongData data = io::read_long_data(a.data_path);
  const int d = data.designs.d();
  auto family = cl::make_family(a.family, d, Matrix::Ones(d, 1));
  const cl::MarginScheme scheme = cl::MarginScheme::named(a.scheme, d);
  const cl::GodambeEstimate est =
      cl::fit(*family, scheme, data.designs, data.y);
  if (data_out) *data_out = std::move(data);
  if (fam_out) *fam_out = std::move(family);
  return est;
}

void print_fit_summary(const cl::GodambeEstimate& est,
                       const cl::GaussianFamily& family) {
  std::cout << "family=" << est.family << " scheme=" << est.scheme
            << " n=" << est.n << "\n";
  std::cout << "logCL = " << io::format_double(est.log_cl)
            << "  penalty tr(JH^-1) = " << io::format_double(est.penalty)
            << (est.boundary ? "  [boundary]" : "") << "\n";
  const Vector se = est.sandwich_se();
  for (int k = 0; k < est.theta.size(); ++k) {
    std::string name = k < est.n_beta
                           ? "beta" + std::to_string(k)
                           : family.cov_param_names()[k - est.n_beta];
    std::cout << "  " << name << " = " << io::format_double(est.theta[k])
              << " (se " << io::format_double(se[k]) << ")\n";
  }
}

int dispatch(int argc, char** argv) {
  CLI::App app{"composite-likelihood inference and model selection"};
  app.require_subcommand(1);

  // ---- fit ----------------------------------------------------------------
  FitArgs fit_args;
  auto* cmd_fit = app.add_subcommand("fit", "fit one model to a data CSV");
  cmd_fit->add_option("--data", fit_args.data_path, "long-format data CSV")
      ->required();
  cmd_fit->add_option("--family", fit_args.family,
                      "exch | unstr (model family)");
  cmd_fit->add_option("--scheme", fit_args.scheme, "full | bcl | tcl");
  cmd_fit->add_option("--out", fit_args.out_path, "write fit JSON here");

  // ---- select ---------------------------------------------------------------
  struct {
    std::string data_path, scheme = "bcl", families = "exch,unstr", out_path;
    std::string penalty_mode = "expected";
  } sel;
  auto* cmd_select =
      app.add_subcommand("select", "criterion comparison of candidate models");
  cmd_select->add_option("--data", sel.data_path, "long-format data CSV")
      ->required();
  cmd_select->add_option("--scheme", sel.scheme, "full | bcl | tcl");
  cmd_select->add_option("--families", sel.families,
                         "comma-separated candidate families");
  cmd_select->add_option("--penalty-mode", sel.penalty_mode,
                         "expected | empirical | classical");
  cmd_select->add_option("--out", sel.out_path, "criterion report CSV");

  // ---- simulate -------------------------------------------------------------
  struct {
    std::string config, out, summary;
    long replicates = -1;
    long seed = -1;
  } simargs;
  auto* cmd_sim = app.add_subcommand("simulate", "run a scenario config");
  cmd_sim->add_option("--config", simargs.config, "scenario TOML file")
      ->required();
  cmd_sim->add_option("--out", simargs.out, "per-replicate results CSV");
  cmd_sim->add_option("--summary-out", simargs.summary, "summary CSV");
  cmd_sim->add_option("--replicates", simargs.replicates,
                      "override replicate count");
  cmd_sim->add_option("--seed", simargs.seed, "override base seed");

  // ---- qfprob ---------------------------------------------------------------
  struct {
    std::string lambdas, noncentrality;
    double threshold = 0.0;
    bool lower = false;
    std::string method = "cf";
    long draws = 1000000;
    long seed = 1;
  } qfargs;
  auto* cmd_qf = app.add_subcommand(
      "qfprob", "tail probability of a quadratic form in normals");
  cmd_qf->add_option("--lambdas", qfargs.lambdas, "comma-separated weights")
      ->required();
  cmd_qf->add_option("--threshold", qfargs.threshold, "threshold c")
      ->required();
  bool upper_flag = false;
  cmd_qf->add_flag("--lower", qfargs.lower, "lower tail (default upper)");
  cmd_qf->add_flag("--upper", upper_flag, "upper tail (the default)");
  cmd_qf->add_option("--noncentrality", qfargs.noncentrality,
                     "comma-separated mean vector");
  cmd_qf->add_option("--method", qfargs.method, "cf | mc");
  cmd_qf->add_option("--draws", qfargs.draws, "Monte Carlo draws");
  cmd_qf->add_option("--seed", qfargs.seed, "Monte Carlo seed");

  // ---- eigen ----------------------------------------------------------------
  struct {
    std::string blocks, preset;
    double n = 500;
    long draws = 200000;
    long seed = 1;
    std::string mode = "closed";
  } eig;
  auto* cmd_eigen = app.add_subcommand(
      "eigen", "B-matrix eigenvalues and selection probabilities");
  cmd_eigen->add_option("--blocks", eig.blocks,
                        "JSON file with h1,h2,j11,j12,j21,j22");
  cmd_eigen->add_option("--preset", eig.preset,
                        "built-in block computation (example2-tcl)");
  cmd_eigen->add_option("--mode", eig.mode, "closed | mc (preset mode)");
  cmd_eigen->add_option("--draws", eig.draws, "MC draws for --mode mc");
  cmd_eigen->add_option("--seed", eig.seed, "MC seed");
  cmd_eigen->add_option("--n", eig.n, "sample size for the CLBIC threshold");

  // ---- jackknife ------------------------------------------------------------
  struct {
    std::string data_path, family = "exch", scheme = "bcl", out_path;
    bool dump = false;
  } jk;
  auto* cmd_jack =
      app.add_subcommand("jackknife", "delete-one jackknife standard errors");
  cmd_jack->add_option("--data", jk.data_path, "long-format data CSV")
      ->required();
  cmd_jack->add_option("--family", jk.family, "exch | unstr");
  cmd_jack->add_option("--scheme", jk.scheme, "full | bcl | tcl");
  cmd_jack->add_option("--out", jk.out_path, "per-parameter CSV");
  cmd_jack->add_flag("--dump-deletions", jk.dump,
                     "include per-deletion estimates");

  // ---- spruce ---------------------------------------------------------------
  struct {
    std::string data_path, synthesize_path, out_dir = ".";
    long seed = 20137;
    bool no_jackknife = false;
  } sp;
  auto* cmd_spruce =
      app.add_subcommand("spruce", "piecewise growth study workflow");
  cmd_spruce->add_option("--data", sp.data_path, "spruce CSV");
  cmd_spruce->add_option("--synthesize", sp.synthesize_path,
                         "write a synthetic look-alike CSV and exit");
  cmd_spruce->add_option("--seed", sp.seed, "seed for --synthesize");
  cmd_spruce->add_option("--out-dir", sp.out_dir, "output directory");
  cmd_spruce->add_flag("--no-jackknife", sp.no_jackknife,
                       "skip jackknife SEs (faster)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (cmd_fit->parsed()) {
    io::LongData data;
    std::unique_ptr<cl::GaussianFamily> family;
    const auto est = run_fit(fit_args, &data, &family);
    print_fit_summary(est, *family);
    if (!fit_args.out_path.empty()) {
      std::ofstream out(fit_args.out_path);
      if (!out) throw DataError("cannot write " + fit_args.out_path);
      out << fit_to_json(est, *family).dump(2) << "\n";
    }
    return 0;
  }

  if (cmd_select->parsed()) {
    io::LongData data = io::read_long_data(sel.data_path);
    const int d = data.designs.d();
    const cl::MarginScheme scheme = cl::MarginScheme::named(sel.scheme, d);
    std::vector<cl::GodambeEstimate> fits;
    std::stringstream fams(sel.families);
    std::string fam_name;
    const auto mode = select::penalty_mode_from(sel.penalty_mode);
    while (std::getline(fams, fam_name, ',')) {
      auto family = cl::make_family(fam_name, d, Matrix::Ones(d, 1));
      cl::FitOptions opts;
      opts.compute_observed = (mode == select::PenaltyMode::Empirical);
      fits.push_back(cl::fit(*family, scheme, data.designs, data.y, opts));
    }
    const auto rep = select::criteria(fits, data.designs.n(), mode);
    std::ostringstream csv;
    csv << "model,log_cl,penalty,claic,clbic,claic_selected,clbic_selected\n";
    for (std::size_t i = 0; i < rep.model_names.size(); ++i) {
      csv << rep.model_names[i] << "," << io::format_double(rep.log_cl[i])
          << "," << io::format_double(rep.penalty[i]) << ","
          << io::format_double(rep.claic[i]) << ","
          << io::format_double(rep.clbic[i]) << ","
          << (static_cast<int>(i) == rep.claic_choice ? 1 : 0) << ","
          << (static_cast<int>(i) == rep.clbic_choice ? 1 : 0) << "\n";
    }
    std::cout << csv.str();
    if (rep.claic_ties.size() > 1 || rep.clbic_ties.size() > 1)
      std::cout << "# tie among candidates detected\n";
    if (!sel.out_path.empty()) {
      std::ofstream out(sel.out_path);
      if (!out) throw DataError("cannot write " + sel.out_path);
      out << csv.str();
    }
    return 0;
  }

  if (cmd_sim->parsed()) {
    sim::ScenarioConfig cfg = sim::load_scenario(simargs.config);
    if (simargs.replicates > 0)
      cfg.replicates = static_cast<int>(simargs.replicates);
    if (simargs.seed >= 0) cfg.seed = static_cast<std::uint64_t>(simargs.seed);
    const sim::DecisionTable table = sim::run_scenario(cfg);
    std::cout << "scenario " << cfg.id << ": " << table.replicates_used << "/"
              << table.replicates_requested << " replicates ("
              << table.failures << " failures)\n";
    for (const auto& key : table.criterion_keys) {
      std::cout << "  " << key << ":";
      for (std::size_t c = 0; c < table.candidate_names.size(); ++c)
        std::cout << " " << table.candidate_names[c] << "="
                  << table.frequency.at(key)[c];
      std::cout << "\n";
    }
    if (!simargs.out.empty()) sim::write_results_csv(simargs.out, cfg, table);
    if (!simargs.summary.empty())
      sim::write_summary_csv(simargs.summary, cfg, table);
    return 0;
  }

  if (cmd_qf->parsed()) {
    qf::QuadFormLaw law;
    law.lambdas = parse_number_list(qfargs.lambdas, "--lambdas");
    if (!qfargs.noncentrality.empty())
      law.noncentrality =
          parse_number_list(qfargs.noncentrality, "--noncentrality");
    qf::TailQuery q;
    q.threshold = qfargs.threshold;
    q.upper = !qfargs.lower;
    q.method =
        qfargs.method == "mc" ? qf::TailMethod::MonteCarlo : qf::TailMethod::CfInversion;
    q.mc_draws = qfargs.draws;
    q.mc_seed = static_cast<std::uint64_t>(qfargs.seed);
    const auto res = qf::tail_prob(law, q);
    std::cout << io::format_double(res.prob) << " (abs.err <= "
              << io::format_double(res.abs_err) << ")\n";
    return 0;
  }

  if (cmd_eigen->parsed()) {
    select::NestedPair blocks;
    if (!eig.blocks.empty()) {
      std::ifstream in(eig.blocks);
      if (!in) throw DataError("cannot open " + eig.blocks);
      json j;
      in >> j;
      blocks.h1 = matrix_from_json(j.at("h1"));
      blocks.h2 = matrix_from_json(j.at("h2"));
      blocks.j11 = matrix_from_json(j.at("j11"));
      blocks.j12 = matrix_from_json(j.at("j12"));
      blocks.j21 = matrix_from_json(j.at("j21"));
      blocks.j22 = matrix_from_json(j.at("j22"));
    } else if (eig.preset == "example2-tcl") {
      const int d = 4;
      const Matrix sigma = models::sigma_schedule(models::SigmaKind::Sigma1,
                                                  static_cast<int>(eig.n), d);
      auto exch = cl::exchangeable_family(d);
      cl::MvnCholFamily unstr(d);
      const Vector tc1 = cl::exchangeable_cov_params(1.0, 0.5);
      const Vector tc2 = unstr.start_cov(sigma);
      const auto scheme = cl::MarginScheme::trivariate(d);
      if (eig.mode == "mc") {
        Vector beta(2);
        beta << 0.3, 1.3;
        Vector theta1(4), theta2(12);
        theta1 << beta, tc1;
        theta2 << beta, tc2;
        select::McBlocksOptions mo;
        mo.draws = eig.draws;
        mo.seed = static_cast<std::uint64_t>(eig.seed);
        blocks = select::expected_blocks_mc(
                     *exch, theta1, unstr, theta2, scheme,
                     models::TrueLaw::mvn(beta, sigma), mo)
                     .blocks;
      } else {
        const auto xm = select::XMoments::iid_rows(d, Matrix::Identity(1, 1));
        blocks = select::expected_blocks_closed(*exch, tc1, unstr, tc2, scheme,
                                                sigma, xm);
      }
    } else {
      throw std::invalid_argument("eigen: give --blocks FILE or --preset");
    }
    const Matrix b = select::bmatrix(blocks);
    const auto rep = select::bmatrix_eigenvalues(b);
    std::cout << "m = " << rep.lambdas.size() << " retained eigenvalues:";
    for (int i = 0; i < rep.lambdas.size(); ++i)
      std::cout << " " << io::format_double(rep.lambdas[i]);
    std::cout << "\n";
    std::cout << "dropped " << rep.n_dropped
              << " near-zero; max imag ratio = "
              << io::format_double(rep.max_imag_ratio) << "\n";
    std::cout << "tr(B) = " << io::format_double(b.trace())
              << ", penalty2 - penalty1 = "
              << io::format_double(blocks.penalty2() - blocks.penalty1())
              << "\n";
    if (rep.lambdas.size() > 0 && rep.lambdas.minCoeff() > 0.0) {
      const auto probs = select::theoretical_selection_probs(rep.lambdas, eig.n);
      std::cout << "C1 (CLAIC keeps the smaller model) = "
                << io::format_double(probs.claic) << "\n";
      std::cout << "CLBIC analogue at log n = "
                << io::format_double(probs.clbic) << "\n";
    }
    return 0;
  }

  if (cmd_jack->parsed()) {
    io::LongData data = io::read_long_data(jk.data_path);
    const int d = data.designs.d();
    auto family = cl::make_family(jk.family, d, Matrix::Ones(d, 1));
    const cl::MarginScheme scheme = cl::MarginScheme::named(jk.scheme, d);
    const auto est = cl::fit(*family, scheme, data.designs, data.y);
    const auto res =
        cl::jackknife(*family, scheme, data.designs, data.y, est);
    std::ostringstream csv;
    csv << "parameter,estimate,jackknife_se\n";
    for (std::size_t k = 0; k < res.natural_names.size(); ++k)
      csv << res.natural_names[k] << ","
          << io::format_double(res.natural_estimate[k]) << ","
          << io::format_double(res.natural_se[k]) << "\n";
    std::cout << csv.str();
    if (!jk.out_path.empty()) {
      std::ofstream out(jk.out_path);
      if (!out) throw DataError("cannot write " + jk.out_path);
      out << csv.str();
      if (jk.dump) {
        out << "# deletion estimates (raw parameters)\n";
        for (int i = 0; i < res.deletion_estimates.rows(); ++i) {
          for (int k = 0; k < res.deletion_estimates.cols(); ++k)
            out << (k ? "," : "")
                << io::format_double(res.deletion_estimates(i, k));
          out << "\n";
        }
      }
    }
    return 0;
  }

  if (cmd_spruce->parsed()) {
    if (!sp.synthesize_path.empty()) {
      const auto data =
          spruce::synthesize(static_cast<std::uint64_t>(sp.seed));
      spruce::write_spruce_csv(sp.synthesize_path, data);
      std::cout << "wrote synthetic spruce data (" << data.n() << " trees) to "
                << sp.synthesize_path << "\n";
      return 0;
    }
    if (sp.data_path.empty())
      throw std::invalid_argument("spruce: need --data or --synthesize");
    const auto data = spruce::load_spruce_csv(sp.data_path);
    const auto rep = spruce::run_spruce(data, !sp.no_jackknife);
    spruce::write_estimates_csv(sp.out_dir + "/spruce_estimates.csv", rep);
    spruce::write_criteria_csv(sp.out_dir + "/spruce_criteria.csv", rep);
    std::cout << "decisions (number of betas):";
    for (const auto& [k, v] : rep.decision) std::cout << " " << k << "=" << v;
    std::cout << "\nwrote " << sp.out_dir << "/spruce_estimates.csv and "
              << sp.out_dir << "/spruce_criteria.csv\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
