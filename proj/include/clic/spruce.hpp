#pragma once

// The spruce growth study: piecewise linear growth in two measurement
// periods with tree-level random effects, ozone fixed effects, nested
// submodels, jackknife standard errors, and the criterion comparison table.
//
// Data schema (CSV): tree_id, plot (1-4), day (integer), log_size (real);
// plots 1 and 2 are the ozone-controlled atmosphere.

#include <array>
#include <string>
#include <vector>

#include "clic/jackknife.hpp"
#include "clic/models.hpp"
#include "clic/select.hpp"

namespace clic::spruce {

inline constexpr std::array<int, 13> kDays = {152, 174, 201, 227, 258, 469,
                                              496, 528, 556, 579, 613, 639,
                                              674};

struct SpruceData {
  std::vector<std::string> tree_ids;
  std::vector<int> plots;      // 1..4; ozone = plot 1 or 2
  std::vector<Vector> log_size;  // one 13-vector per tree, in kDays order
  std::vector<int> days;

  int n() const { return static_cast<int>(tree_ids.size()); }
  bool ozone(int tree) const { return plots[tree] == 1 || plots[tree] == 2; }
};

SpruceData load_spruce_csv(const std::string& path);
void write_spruce_csv(const std::string& path, const SpruceData& data);

// Fixed-effects design row for one day: growth intercept and slope in the
// first period, the continuity offset plus second-period slope afterwards,
// each with its ozone interaction.  Columns (b0..b5):
//   period 1 (152..258):  (1, (t-152)/100, 0, I, I (t-152)/100, 0)
//   period 2 (469..674):  (1, 1.06, (t-445)/100, I, I 1.06, I (t-445)/100)
// Random-effects design (b0, b1, b2) uses the same growth columns without
// the ozone indicator.  Days outside both periods are rejected.
Vector spruce_fixed_row(int day, bool ozone);
Vector spruce_random_row(int day);

// Designs for a set of trees; n_betas selects the nested submodel
// (6 = all, 5 drops b5, 4 drops b5 and b3, 3 drops b5, b3, b4).
models::DesignSet spruce_design(const std::vector<int>& days,
                                const std::vector<bool>& ozone_flags,
                                int n_betas = 6);

// Synthetic look-alike dataset for CI (the original data ships with the R
// package MEMSS; see data/README.md).
SpruceData synthesize(std::uint64_t seed);

struct SpruceFitRow {
  std::string scheme;  // full | tcl | bcl
  cl::GodambeEstimate fit;
  cl::JackknifeResult jack;
};

struct SpruceReport {
  // per scheme: 6-beta fits with jackknife SEs (the estimates table)
  std::vector<SpruceFitRow> estimates;
  // criterion table: per submodel (6,5,4,3 betas) x per scheme
  std::vector<int> submodel_sizes;
  // raw and margin-count-normalized criteria, keyed "aic"/"bic" for full and
  // "claic@tcl" etc. for composite schemes
  std::map<std::string, std::vector<double>> criteria_raw;
  std::map<std::string, std::vector<double>> criteria_normalized;
  std::map<std::string, int> decision;  // chosen submodel size per criterion
};

SpruceReport run_spruce(const SpruceData& data, bool with_jackknife = true);

void write_estimates_csv(const std::string& path, const SpruceReport& rep);
void write_criteria_csv(const std::string& path, const SpruceReport& rep);

}  // namespace clic::spruce
