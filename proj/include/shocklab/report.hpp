#pragma once

// Report rows and their CSV form. Column order is fixed:
//   kind,p,M,R,t,s,estimate,reference,band,pass,n,seed,wall_ms
// Empty cells are optional fields. The pass flag is a pure function of the
// row: pass = (band empty) or |estimate - reference| <= band; one-sided
// checks store max(violation, 0) as the estimate.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace shocklab {

struct ReportRow {
  std::string kind;
  double p = 0.0;
  std::optional<int> M, R;
  std::optional<double> t, s;
  double estimate = 0.0;
  std::optional<double> reference;
  std::optional<double> band;
  bool pass = true;
  long long n = 0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
};

inline bool row_pass(double estimate, std::optional<double> reference,
                     std::optional<double> band) {
  if (!band) return true;
  return std::fabs(estimate - reference.value_or(0.0)) <= *band;
}

inline ReportRow finish_row(ReportRow r) {
  r.pass = row_pass(r.estimate, r.reference, r.band);
  return r;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

inline std::string fmt_opt(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace detail

inline constexpr const char* kReportHeader =
    "kind,p,M,R,t,s,estimate,reference,band,pass,n,seed,wall_ms";

inline void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << kReportHeader << '\n';
  for (const ReportRow& r : rows) {
    os << r.kind << ',' << detail::fmt_double(r.p) << ',' << detail::fmt_opt(r.M) << ','
       << detail::fmt_opt(r.R) << ',' << detail::fmt_opt(r.t) << ',' << detail::fmt_opt(r.s)
       << ',' << detail::fmt_double(r.estimate) << ',' << detail::fmt_opt(r.reference) << ','
       << detail::fmt_opt(r.band) << ',' << (r.pass ? 1 : 0) << ',' << r.n << ',' << r.seed
       << ',' << detail::fmt_double(r.wall_ms) << '\n';
  }
}

inline std::vector<ReportRow> read_report_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader)
    throw UsageError("report CSV: missing or wrong header");
  std::vector<ReportRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    f.push_back(cur);
    if (f.size() != 13)
      throw UsageError("report CSV line " + std::to_string(lineno) + ": expected 13 fields, got " +
                       std::to_string(f.size()));
    try {
      ReportRow r;
      r.kind = f[0];
      r.p = std::stod(f[1]);
      if (!f[2].empty()) r.M = std::stoi(f[2]);
      if (!f[3].empty()) r.R = std::stoi(f[3]);
      if (!f[4].empty()) r.t = std::stod(f[4]);
      if (!f[5].empty()) r.s = std::stod(f[5]);
      r.estimate = std::stod(f[6]);
      if (!f[7].empty()) r.reference = std::stod(f[7]);
      if (!f[8].empty()) r.band = std::stod(f[8]);
      r.pass = f[9] == "1";
      r.n = std::stoll(f[10]);
      r.seed = std::stoull(f[11]);
      r.wall_ms = std::stod(f[12]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw UsageError("report CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace shocklab
