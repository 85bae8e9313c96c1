#pragma once

// Minimal CSV reading (comma-separated, no quoting) plus the long-format
// data layout used by the CLI: subject_id, obs_index, response,
// covariate_1..covariate_s.

#include <string>
#include <vector>

#include "clic/models.hpp"
#include "clic/types.hpp"

namespace clic::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

double to_double(const std::string& field, const std::string& context);
long to_long(const std::string& field, const std::string& context);

struct LongData {
  std::vector<std::string> subject_ids;  // in first-appearance order
  models::DesignSet designs;             // intercept + covariate columns
  std::vector<Vector> y;
};

// Every subject must contribute obs_index 1..d exactly once.
LongData read_long_data(const std::string& path);

void write_long_data(const std::string& path, const models::DesignSet& designs,
                     const std::vector<Vector>& y);

std::string format_double(double v);

}  // namespace clic::io
