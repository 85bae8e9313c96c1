#include "clic/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace clic::io {

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim spaces and a trailing CR
    std::size_t b = field.find_first_not_of(" \t\r");
    std::size_t e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file: " + path);
  CsvTable t;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      std::ostringstream msg;
      msg << path << ": line " << lineno << ": expected " << t.header.size()
          << " fields, got " << fields.size();
      throw DataError(msg.str());
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.header.empty()) throw DataError(path + ": empty CSV file");
  return t;
}

double to_double(const std::string& field, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": cannot parse number '" + field + "'");
  }
}

long to_long(const std::string& field, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": cannot parse integer '" + field + "'");
  }
}

LongData read_long_data(const std::string& path) {
  const CsvTable t = read_csv(path);
  const int c_subject = t.column("subject_id");
  const int c_obs = t.column("obs_index");
  const int c_resp = t.column("response");
  if (c_subject < 0 || c_obs < 0 || c_resp < 0)
    throw DataError(path +
                    ": need columns subject_id, obs_index, response");
  std::vector<int> cov_cols;
  for (int s = 1;; ++s) {
    const int c = t.column("covariate_" + std::to_string(s));
    if (c < 0) break;
    cov_cols.push_back(c);
  }
  if (t.rows.empty()) throw DataError(path + ": no data rows");

  std::map<std::string, int> subject_index;
  std::vector<std::vector<std::pair<int, std::vector<double>>>> bySubject;
  LongData out;
  long lineno = 1;
  for (const auto& row : t.rows) {
    ++lineno;
    const std::string ctx = path + ": line " + std::to_string(lineno);
    const std::string& id = row[c_subject];
    auto [it, inserted] =
        subject_index.try_emplace(id, static_cast<int>(out.subject_ids.size()));
    if (inserted) {
      out.subject_ids.push_back(id);
      bySubject.emplace_back();
    }
    std::vector<double> vals;
    vals.push_back(to_double(row[c_resp], ctx));
    for (int c : cov_cols) vals.push_back(to_double(row[c], ctx));
    bySubject[it->second].emplace_back(
        static_cast<int>(to_long(row[c_obs], ctx)), std::move(vals));
  }

  const int d = static_cast<int>(bySubject.front().size());
  const int s = static_cast<int>(cov_cols.size());
  out.designs.z = Matrix(d, 0);
  for (std::size_t i = 0; i < bySubject.size(); ++i) {
    auto& obs = bySubject[i];
    if (static_cast<int>(obs.size()) != d)
      throw DataError(path + ": subject " + out.subject_ids[i] + " has " +
                      std::to_string(obs.size()) + " rows, expected " +
                      std::to_string(d));
    std::sort(obs.begin(), obs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Matrix x(d, s + 1);
    Vector yi(d);
    for (int j = 0; j < d; ++j) {
      if (obs[j].first != j + 1)
        throw DataError(path + ": subject " + out.subject_ids[i] +
                        " is missing obs_index " + std::to_string(j + 1));
      yi[j] = obs[j].second[0];
      x(j, 0) = 1.0;
      for (int k = 0; k < s; ++k) x(j, k + 1) = obs[j].second[k + 1];
    }
    out.designs.x.push_back(std::move(x));
    out.y.push_back(std::move(yi));
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_long_data(const std::string& path, const models::DesignSet& designs,
                     const std::vector<Vector>& y) {
  std::ofstream outf(path);
  if (!outf) throw DataError("cannot write CSV file: " + path);
  const int s = designs.n_beta() - 1;
  outf << "subject_id,obs_index,response";
  for (int k = 1; k <= s; ++k) outf << ",covariate_" << k;
  outf << "\n";
  for (int i = 0; i < designs.n(); ++i) {
    for (int j = 0; j < designs.d(); ++j) {
      outf << (i + 1) << "," << (j + 1) << "," << format_double(y[i][j]);
      for (int k = 1; k <= s; ++k)
        outf << "," << format_double(designs.x[i](j, k));
      outf << "\n";
    }
  }
}

}  // namespace clic::io
