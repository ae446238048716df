#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qsky/error.hpp"
#include "qsky/tomography.hpp"

namespace qsky {

/// Writes `# key = value` metadata lines, then one row per setting.
inline void write_record_csv(std::ostream& os, const TomographyRecord& rec) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "# coincidence_window = " << rec.coincidence_window << '\n'
     << "# integration_time = " << rec.integration_time << '\n'
     << "# pair_rate = " << rec.pair_rate << '\n'
     << "# noise_rate_a = " << rec.noise_rate_a << '\n'
     << "# noise_rate_b = " << rec.noise_rate_b << '\n'
     << "# sampling = " << (rec.sampling == Sampling::Poisson ? "poisson" : "deterministic") << '\n'
     << "# seed = " << rec.seed << '\n'
     << "basis_A,eigen_A,basis_B,eigen_B,C,A,B\n";
  for (const auto& e : rec.entries) {
    os << basis_label(e.setting.a.basis) << ',' << (e.setting.a.eigen > 0 ? "+" : "-") << ','
       << basis_label(e.setting.b.basis) << ',' << (e.setting.b.eigen > 0 ? "+" : "-") << ',' << e.coincidences
       << ',' << e.singles_a << ',' << e.singles_b << '\n';
  }
  os.precision(old_precision);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size())
    throw ValidationError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  return v;
}

inline int parse_sign(const std::string& s, int line) {
  if (s == "+" || s == "+1" || s == "1") return +1;
  if (s == "-" || s == "-1") return -1;
  throw ValidationError("line " + std::to_string(line) + ": eigenvalue must be + or -, got '" + s + "'");
}

}  // namespace detail

inline TomographyRecord read_record_csv(std::istream& is) {
  TomographyRecord rec;
  std::string raw;
  int line = 0;
  bool header_seen = false;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    if (s[0] == '#') {
      const auto eq = s.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = detail::trim(s.substr(1, eq - 1));
      const std::string val = detail::trim(s.substr(eq + 1));
      if (key == "coincidence_window") rec.coincidence_window = detail::parse_double(val, line);
      else if (key == "integration_time") rec.integration_time = detail::parse_double(val, line);
      else if (key == "pair_rate") rec.pair_rate = detail::parse_double(val, line);
      else if (key == "noise_rate_a") rec.noise_rate_a = detail::parse_double(val, line);
      else if (key == "noise_rate_b") rec.noise_rate_b = detail::parse_double(val, line);
      else if (key == "sampling") rec.sampling = (val == "poisson") ? Sampling::Poisson : Sampling::Deterministic;
      else if (key == "seed") rec.seed = std::stoull(val);
      continue;
    }
    if (!header_seen) {
      if (s != "basis_A,eigen_A,basis_B,eigen_B,C,A,B")
        throw ValidationError("line " + std::to_string(line) + ": unexpected header '" + s + "'");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(detail::trim(c));
    if (cols.size() != 7)
      throw ValidationError("line " + std::to_string(line) + ": expected 7 columns, found " +
                            std::to_string(cols.size()));
    if (cols[0].size() != 1 || cols[2].size() != 1)
      throw ValidationError("line " + std::to_string(line) + ": basis must be one of Z, X, Y");
    SettingCounts e;
    e.setting.a = {parse_basis(cols[0][0]), detail::parse_sign(cols[1], line)};
    e.setting.b = {parse_basis(cols[2][0]), detail::parse_sign(cols[3], line)};
    e.coincidences = detail::parse_double(cols[4], line);
    e.singles_a = detail::parse_double(cols[5], line);
    e.singles_b = detail::parse_double(cols[6], line);
    rec.entries.push_back(e);
  }
  detail::require(header_seen, "record has no column header");
  rec.validate();
  return rec;
}

}  // namespace qsky
