#include "clic/spruce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "clic/csv.hpp"

namespace clic::spruce {

namespace {

bool in_period1(int day) { return day >= 152 && day <= 258; }
bool in_period2(int day) { return day >= 469 && day <= 674; }

// growth columns shared by the fixed and random designs
void growth_columns(int day, double* c0, double* c1, double* c2) {
  *c0 = 1.0;
  if (in_period1(day)) {
    *c1 = (day - 152) / 100.0;
    *c2 = 0.0;
  } else if (in_period2(day)) {
    *c1 = (258 - 152) / 100.0;  // continuity at the period break
    *c2 = (day - 445) / 100.0;  // 445 treats days 258 and 469 as one unit apart
  } else {
    throw std::invalid_argument("spruce design: day " + std::to_string(day) +
                                " outside both measurement periods");
  }
}

}  // namespace

Vector spruce_fixed_row(int day, bool ozone) {
  double c0, c1, c2;
  growth_columns(day, &c0, &c1, &c2);
  Vector row(6);
  const double ind = ozone ? 1.0 : 0.0;
  row << c0, c1, c2, ind * c0, ind * c1, ind * c2;
  return row;
}

Vector spruce_random_row(int day) {
  double c0, c1, c2;
  growth_columns(day, &c0, &c1, &c2);
  Vector row(3);
  row << c0, c1, c2;
  return row;
}

models::DesignSet spruce_design(const std::vector<int>& days,
                                const std::vector<bool>& ozone_flags,
                                int n_betas) {
  // nested submodels drop ozone effects in the order b5, b3, b4
  std::vector<int> keep;
  switch (n_betas) {
    case 6: keep = {0, 1, 2, 3, 4, 5}; break;
    case 5: keep = {0, 1, 2, 3, 4}; break;
    case 4: keep = {0, 1, 2, 4}; break;
    case 3: keep = {0, 1, 2}; break;
    default:
      throw std::invalid_argument("spruce_design: n_betas must be 3..6");
  }
  const int d = static_cast<int>(days.size());
  models::DesignSet out;
  out.z = Matrix(d, 3);
  for (int j = 0; j < d; ++j) out.z.row(j) = spruce_random_row(days[j]);
  for (bool oz : ozone_flags) {
    Matrix x(d, keep.size());
    for (int j = 0; j < d; ++j) {
      const Vector full = spruce_fixed_row(days[j], oz);
      for (std::size_t c = 0; c < keep.size(); ++c) x(j, c) = full[keep[c]];
    }
    out.x.push_back(std::move(x));
  }
  return out;
}

SpruceData load_spruce_csv(const std::string& path) {
  const io::CsvTable t = io::read_csv(path);
  const int c_tree = t.column("tree_id");
  const int c_plot = t.column("plot");
  const int c_day = t.column("day");
  const int c_size = t.column("log_size");
  if (c_tree < 0 || c_plot < 0 || c_day < 0 || c_size < 0)
    throw DataError(path + ": need columns tree_id, plot, day, log_size");

  std::map<std::string, int> index;
  SpruceData data;
  data.days.assign(kDays.begin(), kDays.end());
  std::vector<std::map<int, double>> values;
  long lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    const std::string ctx = path + ": line " + std::to_string(lineno);
    auto [it, inserted] =
        index.try_emplace(row[c_tree], static_cast<int>(data.tree_ids.size()));
    if (inserted) {
      data.tree_ids.push_back(row[c_tree]);
      data.plots.push_back(static_cast<int>(io::to_long(row[c_plot], ctx)));
      if (data.plots.back() < 1 || data.plots.back() > 4)
        throw DataError(ctx + ": plot must be 1..4");
      values.emplace_back();
    }
    const int day = static_cast<int>(io::to_long(row[c_day], ctx));
    values[it->second][day] = io::to_double(row[c_size], ctx);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    Vector v(13);
    for (int j = 0; j < 13; ++j) {
      const auto it = values[i].find(kDays[j]);
      if (it == values[i].end())
        throw DataError(path + ": tree " + data.tree_ids[i] +
                        " is missing day " + std::to_string(kDays[j]));
      v[j] = it->second;
    }
    data.log_size.push_back(std::move(v));
  }
  if (data.n() == 0) throw DataError(path + ": no trees found");
  return data;
}

void write_spruce_csv(const std::string& path, const SpruceData& data) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "tree_id,plot,day,log_size\n";
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < 13; ++j)
      out << data.tree_ids[i] << "," << data.plots[i] << "," << kDays[j] << ","
          << io::format_double(data.log_size[i][j]) << "\n";
}

SpruceData synthesize(std::uint64_t seed) {
  // Parameters in the vicinity of the real-data fits.
  Vector beta(6);
  beta << 4.2, 1.4, 0.37, -0.1, -0.22, -0.01;
  Vector psi_diag(3);
  psi_diag << 0.6 * 0.6, 0.27 * 0.27, 0.1 * 0.1;
  const Matrix psi = psi_diag.asDiagonal();
  const double resid_sd = 0.14;

  SpruceData data;
  data.days.assign(kDays.begin(), kDays.end());
  // plot sizes mirroring the four-plot layout of the original study
  const std::array<int, 4> plot_sizes = {27, 27, 12, 13};
  std::vector<bool> ozone;
  for (int p = 0; p < 4; ++p)
    for (int i = 0; i < plot_sizes[p]; ++i) {
      data.plots.push_back(p + 1);
      ozone.push_back(p < 2);
      data.tree_ids.push_back("t" + std::to_string(data.plots.size()));
    }

  const models::DesignSet designs =
      spruce_design(data.days, ozone, 6);
  models::TrueLaw law;
  law.beta = beta;
  law.z = designs.z;
  law.psi = psi;
  law.resid_cov = resid_sd * resid_sd * Matrix::Identity(13, 13);
  data.log_size = models::simulate(law, designs, Rng(seed).stream(0x5badce));
  return data;
}

SpruceReport run_spruce(const SpruceData& data, bool with_jackknife) {
  SpruceReport rep;
  rep.submodel_sizes = {6, 5, 4, 3};
  std::vector<bool> ozone;
  for (int i = 0; i < data.n(); ++i) ozone.push_back(data.ozone(i));

  struct SchemeDef {
    std::string name;
    double divisor;
  };
  const std::vector<SchemeDef> schemes = {
      {"full", 1.0}, {"tcl", 286.0}, {"bcl", 78.0}};

  for (const auto& sd : schemes) {
    const cl::MarginScheme scheme = cl::MarginScheme::named(
        sd.name == "full" ? "full" : sd.name, 13);
    std::vector<cl::GodambeEstimate> fits;
    cl::LmmCholFamily family(spruce_design(data.days, ozone, 6).z, "spruce");
    for (int nb : rep.submodel_sizes) {
      const models::DesignSet designs = spruce_design(data.days, ozone, nb);
      cl::FitOptions opts;
      opts.compute_observed = false;
      fits.push_back(cl::fit(family, scheme, designs, data.log_size, opts));
    }
    // estimates table from the 6-beta model
    {
      SpruceFitRow row;
      row.scheme = sd.name;
      row.fit = fits.front();
      if (with_jackknife) {
        const models::DesignSet designs = spruce_design(data.days, ozone, 6);
        row.jack =
            cl::jackknife(family, scheme, designs, data.log_size, fits.front());
      }
      rep.estimates.push_back(std::move(row));
    }
    const bool full = sd.name == "full";
    // classical p-penalty for the full-likelihood AIC/BIC columns
    const select::PenaltyMode mode = full ? select::PenaltyMode::ClassicalP
                                          : select::PenaltyMode::ExpectedAtFit;
    const auto crit = select::criteria(fits, data.n(), mode);
    const std::string k_aic = full ? "aic" : "claic@" + sd.name;
    const std::string k_bic = full ? "bic" : "clbic@" + sd.name;
    std::vector<double> raw_a, raw_b, norm_a, norm_b;
    for (int i = 0; i < 4; ++i) {
      raw_a.push_back(crit.claic[i]);
      raw_b.push_back(crit.clbic[i]);
      norm_a.push_back(crit.claic[i] / sd.divisor);
      norm_b.push_back(crit.clbic[i] / sd.divisor);
    }
    rep.criteria_raw[k_aic] = raw_a;
    rep.criteria_raw[k_bic] = raw_b;
    rep.criteria_normalized[k_aic] = norm_a;
    rep.criteria_normalized[k_bic] = norm_b;
    rep.decision[k_aic] = rep.submodel_sizes[crit.claic_choice];
    rep.decision[k_bic] = rep.submodel_sizes[crit.clbic_choice];
  }
  return rep;
}

void write_estimates_csv(const std::string& path, const SpruceReport& rep) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "parameter";
  for (const auto& row : rep.estimates)
    out << ",estimate_" << row.scheme << ",se_" << row.scheme;
  out << "\n";
  if (rep.estimates.empty()) return;
  const auto& names = rep.estimates.front().jack.natural_names;
  if (names.empty()) {
    // no jackknife: raw parameters only
    const int p = static_cast<int>(rep.estimates.front().fit.theta.size());
    for (int k = 0; k < p; ++k) {
      out << "theta" << k;
      for (const auto& row : rep.estimates)
        out << "," << io::format_double(row.fit.theta[k]) << ",";
      out << "\n";
    }
    return;
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    out << names[k];
    for (const auto& row : rep.estimates)
      out << "," << io::format_double(row.jack.natural_estimate[k]) << ","
          << io::format_double(row.jack.natural_se[k]);
    out << "\n";
  }
}

void write_criteria_csv(const std::string& path, const SpruceReport& rep) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  std::vector<std::string> keys;
  for (const auto& [k, v] : rep.criteria_normalized) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  out << "n_betas";
  for (const auto& k : keys) out << "," << k << "," << k << "_raw";
  out << "\n";
  for (std::size_t i = 0; i < rep.submodel_sizes.size(); ++i) {
    out << rep.submodel_sizes[i];
    for (const auto& k : keys)
      out << "," << io::format_double(rep.criteria_normalized.at(k)[i]) << ","
          << io::format_double(rep.criteria_raw.at(k)[i]);
    out << "\n";
  }
  out << "decision";
  for (const auto& k : keys) out << "," << rep.decision.at(k) << ",";
  out << "\n";
}

}  // namespace clic::spruce
