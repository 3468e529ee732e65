#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mixbound/bounds.hpp"
#include "mixbound/chain.hpp"
#include "mixbound/errors.hpp"
#include "mixbound/simulate.hpp"
#include "mixbound/spectral.hpp"

namespace mixbound {

using nlohmann::json;

struct ParsedInput {
  std::optional<StochasticMatrix> matrix;   // single-matrix files
  std::optional<TimeVaryingKernel> kernel;  // sequence files ("slices")
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("FileNotFound", "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

[[noreturn]] inline void parse_fail(const std::string& path, int line, int col,
                                    const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line << ":" << col << ": " << what;
  throw ValidationError("ParseError", os.str());
}

inline double parse_number(const std::string& path, int line, int col,
                           const std::string& text) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  double value = 0.0;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    parse_fail(path, line, col, "cannot parse '" + text + "' as a number");
  return value;
}

// CSV: one matrix row per line, comma-separated decimals, blank lines and
// '#'-comment lines ignored; LF or CRLF.
inline Eigen::MatrixXd parse_csv_matrix(const std::string& path,
                                        const std::string& content) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(content);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::size_t first = raw.find_first_not_of(" \t");
    if (first == std::string::npos || raw[first] == '#') continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = raw.find(',', start);
      const std::string cell =
          raw.substr(start, comma == std::string::npos ? std::string::npos
                                                       : comma - start);
      row.push_back(parse_number(path, line_no, static_cast<int>(start) + 1,
                                 cell));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream os;
      os << "expected " << rows.front().size() << " columns, got "
         << row.size();
      parse_fail(path, line_no, 1, os.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) parse_fail(path, line_no, 1, "no matrix rows found");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return m;
}

inline Eigen::MatrixXd json_to_raw_matrix(const std::string& path,
                                          const json& j) {
  if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
    parse_fail(path, 1, 1, "expected a matrix object with a 'rows' array");
  const json& rows = j["rows"];
  if (rows.empty()) parse_fail(path, 1, 1, "'rows' is empty");
  const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  if (cols == 0) parse_fail(path, 1, 1, "matrix rows must be non-empty arrays");
  if (j.contains("n") &&
      (!j["n"].is_number_integer() ||
       j["n"].get<long long>() != static_cast<long long>(rows.size())))
    parse_fail(path, 1, 1, "'n' does not match the number of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols)
      parse_fail(path, 1, 1, "matrix rows have inconsistent lengths");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!rows[i][k].is_number())
        parse_fail(path, 1, 1, "matrix entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k].get<double>();
    }
  }
  return m;
}

}  // namespace detail

// Load a matrix or kernel file.  JSON is detected by a .json extension or a
// leading '{'; everything else parses as CSV.  Matrices are validated on the
// way in, so the result is ready to use.
inline ParsedInput load_input(const std::string& path) {
  const std::string content = detail::read_file(path);
  ParsedInput out;

  std::size_t first = content.find_first_not_of(" \t\r\n");
  const bool looks_json =
      (path.size() >= 5 && path.substr(path.size() - 5) == ".json") ||
      (first != std::string::npos && content[first] == '{');
  if (!looks_json) {
    out.matrix = StochasticMatrix(detail::parse_csv_matrix(path, content));
    return out;
  }

  json j;
  try {
    j = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ValidationError("ParseError", path + ": " + e.what());
  }
  if (j.contains("slices")) {
    if (!j["slices"].is_array() || j["slices"].empty())
      detail::parse_fail(path, 1, 1, "'slices' must be a non-empty array");
    std::vector<StochasticMatrix> slices;
    for (const json& s : j["slices"])
      slices.emplace_back(detail::json_to_raw_matrix(path, s));
    bool periodic = false;
    if (j.contains("periodic")) {
      if (!j["periodic"].is_boolean())
        detail::parse_fail(path, 1, 1, "'periodic' must be a boolean");
      periodic = j["periodic"].get<bool>();
    }
    out.kernel = TimeVaryingKernel(std::move(slices), periodic);
    return out;
  }
  out.matrix = StochasticMatrix(detail::json_to_raw_matrix(path, j));
  return out;
}

// ---------------------------------------------------------------------------
// JSON serialization (full double precision; round-trips)
// ---------------------------------------------------------------------------

namespace detail {

inline json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Eigen::VectorXd json_to_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = a[i].is_null()
                                          ? std::numeric_limits<double>::quiet_NaN()
                                          : a[i].get<double>();
  return v;
}

inline json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd json_to_mat(const json& rows) {
  if (rows.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k].get<double>();
  return m;
}

// Non-finite doubles serialize to null; read them back as NaN.
inline double json_num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : j.get<double>();
}

}  // namespace detail

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  return json{{"n", m.rows()}, {"rows", detail::mat_to_json(m)}};
}

inline json kernel_to_json(const TimeVaryingKernel& k) {
  json slices = json::array();
  for (int t = 0; t < k.slice_count(); ++t)
    slices.push_back(matrix_to_json(k.slice(t).matrix()));
  return json{{"slices", std::move(slices)}, {"periodic", k.periodic()}};
}

inline json curve_to_json(const BoundCurve& c) {
  json j;
  j["label"] = c.label;
  j["rate"] = c.rate;
  j["constant"] = c.constant ? json(*c.constant) : json(nullptr);
  j["values"] = c.values;
  j["metadata"] = c.metadata;
  j["note"] = c.note;
  return j;
}

inline BoundCurve curve_from_json(const json& j) {
  BoundCurve c;
  c.label = j.at("label").get<std::string>();
  c.rate = detail::json_num(j.at("rate"));
  if (!j.at("constant").is_null()) c.constant = j.at("constant").get<double>();
  c.values = j.at("values").get<std::vector<double>>();
  for (const auto& [key, val] : j.at("metadata").items())
    c.metadata[key] = detail::json_num(val);
  c.note = j.at("note").get<std::string>();
  return c;
}

inline json spectral_to_json(const SpectralSummary& s) {
  json evs = json::array();
  for (const auto& ev : s.eigenvalues)
    evs.push_back(json::array({ev.real(), ev.imag()}));
  return json{{"eigenvalues", std::move(evs)},
              {"radius", s.radius},
              {"gelfand_tail", s.gelfand_tail},
              {"eigen_residual", s.eigen_residual},
              {"method", s.method},
              {"notes", s.notes},
              {"power",
               json{{"radius", s.power.radius},
                    {"iterations", s.power.iterations},
                    {"residual", s.power.residual},
                    {"converged", s.power.converged}}}};
}

inline SpectralSummary spectral_from_json(const json& j) {
  SpectralSummary s;
  for (const json& ev : j.at("eigenvalues"))
    s.eigenvalues.emplace_back(detail::json_num(ev[0]), detail::json_num(ev[1]));
  s.radius = detail::json_num(j.at("radius"));
  s.gelfand_tail = detail::json_num(j.at("gelfand_tail"));
  s.eigen_residual = detail::json_num(j.at("eigen_residual"));
  s.method = j.at("method").get<std::string>();
  s.notes = j.at("notes").get<std::vector<std::string>>();
  s.power.radius = detail::json_num(j.at("power").at("radius"));
  s.power.iterations = j.at("power").at("iterations").get<int>();
  s.power.residual = detail::json_num(j.at("power").at("residual"));
  s.power.converged = j.at("power").at("converged").get<bool>();
  return s;
}

inline json report_to_json(const BoundsReport& r) {
  json j;
  j["type"] = "bounds-report";
  j["time_varying"] = r.time_varying;
  j["periodic"] = r.periodic;
  j["states"] = r.states;
  j["horizon"] = r.horizon;
  j["m_max"] = r.m_max;
  json profiles = json::array();
  for (const KappaProfile& kp : r.kappa_profiles)
    profiles.push_back(json{{"m", kp.step_count},
                            {"scalar", kp.scalar},
                            {"pairwise", detail::mat_to_json(kp.pairwise)}});
  j["kappa_profiles"] = std::move(profiles);
  j["slice_kappas"] = r.slice_kappas;
  j["r_vhat"] = r.r_vhat;
  j["lambda2"] = r.lambda2;
  j["one_minus_kappa"] = r.one_minus_kappa;
  j["reversible"] = r.reversible;
  j["stationary"] = r.stationary.size() > 0
                        ? detail::vec_to_json(r.stationary)
                        : json(nullptr);
  j["ds_constants"] = r.ds_constants;
  json curves = json::array();
  for (const BoundCurve& c : r.curves) curves.push_back(curve_to_json(c));
  j["curves"] = std::move(curves);
  json ds = json::array();
  for (const BoundCurve& c : r.ds_curves) ds.push_back(curve_to_json(c));
  j["ds_curves"] = std::move(ds);
  j["oracle"] = r.oracle;
  j["oracle_to_stationary"] = r.oracle_to_stationary.size() > 0
                                  ? detail::mat_to_json(r.oracle_to_stationary)
                                  : json(nullptr);
  j["flags"] = json{{"lambda2_le_r", r.flags.lambda2_le_r},
                    {"r_le_one_minus_kappa", r.flags.r_le_one_minus_kappa},
                    {"oracle_dominated", r.flags.oracle_dominated},
                    {"ds_half_dominates", r.flags.ds_half_dominates},
                    {"ds_full_flagged", r.flags.ds_full_flagged}};
  j["worst_oracle_pair"] = json::array({r.worst_oracle_pair.i,
                                        r.worst_oracle_pair.j});
  j["worst_kappa_pair"] = json::array({r.worst_kappa_pair.i,
                                       r.worst_kappa_pair.j});
  j["spectral"] = spectral_to_json(r.spectral);
  j["notes"] = r.notes;
  return j;
}

inline BoundsReport report_from_json(const json& j) {
  BoundsReport r;
  r.time_varying = j.at("time_varying").get<bool>();
  r.periodic = j.at("periodic").get<bool>();
  r.states = j.at("states").get<int>();
  r.horizon = j.at("horizon").get<int>();
  r.m_max = j.at("m_max").get<int>();
  for (const json& p : j.at("kappa_profiles")) {
    KappaProfile kp;
    kp.step_count = p.at("m").get<int>();
    kp.scalar = detail::json_num(p.at("scalar"));
    kp.pairwise = detail::json_to_mat(p.at("pairwise"));
    r.kappa_profiles.push_back(std::move(kp));
  }
  r.slice_kappas = j.at("slice_kappas").get<std::vector<double>>();
  r.r_vhat = detail::json_num(j.at("r_vhat"));
  r.lambda2 = detail::json_num(j.at("lambda2"));
  r.one_minus_kappa = detail::json_num(j.at("one_minus_kappa"));
  r.reversible = j.at("reversible").get<bool>();
  if (!j.at("stationary").is_null())
    r.stationary = detail::json_to_vec(j.at("stationary"));
  r.ds_constants = j.at("ds_constants").get<std::vector<double>>();
  for (const json& c : j.at("curves")) r.curves.push_back(curve_from_json(c));
  for (const json& c : j.at("ds_curves"))
    r.ds_curves.push_back(curve_from_json(c));
  r.oracle = j.at("oracle").get<std::vector<double>>();
  if (!j.at("oracle_to_stationary").is_null())
    r.oracle_to_stationary = detail::json_to_mat(j.at("oracle_to_stationary"));
  const json& f = j.at("flags");
  r.flags.lambda2_le_r = f.at("lambda2_le_r").get<bool>();
  r.flags.r_le_one_minus_kappa = f.at("r_le_one_minus_kappa").get<bool>();
  r.flags.oracle_dominated = f.at("oracle_dominated").get<bool>();
  r.flags.ds_half_dominates = f.at("ds_half_dominates").get<bool>();
  r.flags.ds_full_flagged = f.at("ds_full_flagged").get<bool>();
  r.worst_oracle_pair = PairId{j.at("worst_oracle_pair")[0].get<int>(),
                               j.at("worst_oracle_pair")[1].get<int>()};
  r.worst_kappa_pair = PairId{j.at("worst_kappa_pair")[0].get<int>(),
                              j.at("worst_kappa_pair")[1].get<int>()};
  r.spectral = spectral_from_json(j.at("spectral"));
  r.notes = j.at("notes").get<std::vector<std::string>>();
  return r;
}

inline json sim_to_json(const SimResult& r) {
  json j;
  j["type"] = "sim-result";
  j["trials"] = r.trials;
  j["horizon"] = r.horizon;
  j["states"] = r.states;
  j["not_coupled_counts"] = r.not_coupled_counts;
  j["p_not_coupled"] = r.p_not_coupled;
  j["ci_half"] = r.ci_half;
  j["coupling_time_histogram"] = r.coupling_time_histogram;
  j["marginal_counts1"] = detail::mat_to_json(r.marginal_counts1);
  j["marginal_counts2"] = detail::mat_to_json(r.marginal_counts2);
  return j;
}

inline json fit_to_json(const PerturbationFit& f) {
  return json{{"type", "perturbation-fit"},
              {"feasible", f.feasible},
              {"epsilon", f.epsilon},
              {"delta", f.delta},
              {"kappa_bar", f.kappa_bar},
              {"r_base", f.r_base},
              {"rate_md", f.rate_md},
              {"rate_md_alt", f.rate_md_alt},
              {"rate_spectral", f.rate_spectral},
              {"sense1", f.sense1},
              {"sense2", f.sense2},
              {"domination_max_ratio", f.domination_max_ratio},
              {"witness", json{{"t", f.witness.t},
                               {"i", f.witness.i},
                               {"j", f.witness.j},
                               {"state", f.witness.state},
                               {"constraint", f.witness.constraint}}}};
}

// ---------------------------------------------------------------------------
// Text rendering (9 significant digits)
// ---------------------------------------------------------------------------

inline std::string fmt_g9(double x) {
  if (std::isnan(x)) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace detail {

inline std::string yesno(bool b) { return b ? "yes" : "no"; }
inline std::string okbad(bool b) { return b ? "ok" : "VIOLATED"; }

// k column + named value columns, aligned on width.
inline std::string value_table(const std::vector<std::string>& headers,
                               const std::vector<const std::vector<double>*>&
                                   columns) {
  std::ostringstream os;
  std::size_t rows = 0;
  for (const auto* c : columns) rows = std::max(rows, c->size());
  os << "    k";
  for (const auto& h : headers)
    os << "  "
       << std::setw(static_cast<int>(std::max<std::size_t>(h.size(), 12)))
       << h;
  os << "\n";
  for (std::size_t k = 0; k < rows; ++k) {
    os << "  " << std::setw(3) << k;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& v = *columns[c];
      os << "  " << std::setw(static_cast<int>(
                        std::max<std::size_t>(headers[c].size(), 12)))
         << (k < v.size() ? fmt_g9(v[k]) : "-");
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace detail

inline std::string render_report_table(const BoundsReport& r) {
  std::ostringstream os;
  os << (r.time_varying ? "time-varying kernel report\n"
                        : "homogeneous chain report\n");
  os << "  states: " << r.states << "  horizon: " << r.horizon;
  if (!r.time_varying) os << "  m-max: " << r.m_max;
  if (r.time_varying)
    os << "  periodic: " << detail::yesno(r.periodic);
  os << "\n";
  if (!r.kappa_profiles.empty() && !r.time_varying) {
    os << "  kappa: " << fmt_g9(r.kappa_profiles.front().scalar)
       << "  1-kappa: " << fmt_g9(r.one_minus_kappa) << "\n";
    if (r.kappa_profiles.size() > 1) {
      os << "  kappa^(m):";
      for (const KappaProfile& kp : r.kappa_profiles)
        os << "  m=" << kp.step_count << ": " << fmt_g9(kp.scalar);
      os << "\n";
    }
  }
  if (r.time_varying) {
    os << "  per-slice kappa:";
    for (std::size_t t = 0; t < r.slice_kappas.size(); ++t)
      os << "  t=" << t << ": " << fmt_g9(r.slice_kappas[t]);
    os << "\n";
  }
  os << "  r(Vhat): " << fmt_g9(r.r_vhat) << "  |lambda2|: "
     << fmt_g9(r.lambda2) << "\n";
  if (!r.time_varying) {
    os << "  reversible: " << detail::yesno(r.reversible);
    if (r.reversible) {
      os << "  ds-constants:";
      for (std::size_t i = 0; i < r.ds_constants.size(); ++i)
        os << "  s" << i << ": " << fmt_g9(r.ds_constants[i]);
    }
    os << "\n";
  }
  os << "  flags: |lambda2|<=r " << detail::okbad(r.flags.lambda2_le_r);
  if (!r.time_varying)
    os << ", r<=1-kappa " << detail::okbad(r.flags.r_le_one_minus_kappa);
  os << ", oracle-dominated " << detail::okbad(r.flags.oracle_dominated);
  if (r.reversible)
    os << ", ds-half " << detail::okbad(r.flags.ds_half_dominates)
       << ", ds-below-full-envelope "
       << (r.flags.ds_full_flagged ? "yes (convention note)" : "no");
  os << "\n";
  os << "  worst oracle pair: (" << r.worst_oracle_pair.i << ","
     << r.worst_oracle_pair.j << ")  worst kappa pair: ("
     << r.worst_kappa_pair.i << "," << r.worst_kappa_pair.j << ")\n";
  for (const std::string& note : r.notes) os << "  note: " << note << "\n";
  for (const BoundCurve& c : r.curves) {
    os << "  curve " << c.label << ": rate " << fmt_g9(c.rate);
    if (c.constant) os << ", constant " << fmt_g9(*c.constant);
    if (!c.note.empty()) os << " (" << c.note << ")";
    os << "\n";
  }

  std::vector<std::string> headers{"exact"};
  std::vector<const std::vector<double>*> columns{&r.oracle};
  for (const BoundCurve& c : r.curves) {
    headers.push_back(c.label);
    columns.push_back(&c.values);
  }
  for (const BoundCurve& c : r.ds_curves) {
    headers.push_back(c.label);
    columns.push_back(&c.values);
  }
  os << detail::value_table(headers, columns);
  return os.str();
}

inline std::string render_report_csv(const BoundsReport& r) {
  std::ostringstream os;
  os << "# states=" << r.states << " horizon=" << r.horizon
     << " kappa=" << fmt_g9(r.kappa_profiles.empty()
                                ? std::numeric_limits<double>::quiet_NaN()
                                : r.kappa_profiles.front().scalar)
     << " r_vhat=" << fmt_g9(r.r_vhat) << " lambda2=" << fmt_g9(r.lambda2)
     << "\n";
  os << "k,exact";
  for (const BoundCurve& c : r.curves) os << "," << c.label;
  for (const BoundCurve& c : r.ds_curves) os << "," << c.label;
  os << "\n";
  for (std::size_t k = 0; k < r.oracle.size(); ++k) {
    os << k << "," << fmt_g9(r.oracle[k]);
    for (const BoundCurve& c : r.curves)
      os << "," << (k < c.values.size() ? fmt_g9(c.values[k]) : "");
    for (const BoundCurve& c : r.ds_curves)
      os << "," << (k < c.values.size() ? fmt_g9(c.values[k]) : "");
    os << "\n";
  }
  return os.str();
}

inline std::string render_sim_table(const SimResult& r,
                                    const std::vector<double>& exact_bound,
                                    bool pass) {
  std::ostringstream os;
  os << "coupling simulation\n";
  os << "  trials: " << r.trials << "  horizon: " << r.horizon
     << "  states: " << r.states << "\n";
  os << "    n  p_not_coupled     ci95_half   exact_bound\n";
  for (std::size_t n = 0; n < r.p_not_coupled.size(); ++n) {
    os << "  " << std::setw(3) << n << "  " << std::setw(13)
       << fmt_g9(r.p_not_coupled[n]) << "  " << std::setw(12)
       << fmt_g9(r.ci_half[n]) << "  " << std::setw(12)
       << (n < exact_bound.size() ? fmt_g9(exact_bound[n]) : "-") << "\n";
  }
  os << "  never-coupled trials: " << r.coupling_time_histogram.back() << "\n";
  os << "  domination verdict: " << (pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

inline std::string render_sim_csv(const SimResult& r,
                                  const std::vector<double>& exact_bound,
                                  bool pass) {
  std::ostringstream os;
  os << "# trials=" << r.trials << " horizon=" << r.horizon
     << " verdict=" << (pass ? "PASS" : "FAIL") << "\n";
  os << "n,p_not_coupled,ci95_half,exact_bound\n";
  for (std::size_t n = 0; n < r.p_not_coupled.size(); ++n) {
    os << n << "," << fmt_g9(r.p_not_coupled[n]) << "," << fmt_g9(r.ci_half[n])
       << ","
       << (n < exact_bound.size() ? fmt_g9(exact_bound[n]) : "") << "\n";
  }
  return os.str();
}

inline std::string render_fit_table(const PerturbationFit& f) {
  std::ostringstream os;
  os << "perturbation fit\n";
  os << "  feasible: " << detail::yesno(f.feasible) << "\n";
  if (!f.feasible) {
    os << "  infeasible constraint: " << f.witness.constraint << " at slice "
       << f.witness.t << ", pair (" << f.witness.i << "," << f.witness.j
       << "), state " << f.witness.state << "\n";
    return os.str();
  }
  os << "  epsilon: " << fmt_g9(f.epsilon) << "  delta: " << fmt_g9(f.delta)
     << "\n";
  os << "  kappa_bar: " << fmt_g9(f.kappa_bar) << "  r(V_base): "
     << fmt_g9(f.r_base) << "\n";
  os << "  rates: contraction " << fmt_g9(f.rate_md) << ", damping "
     << fmt_g9(f.rate_md_alt) << ", operator " << fmt_g9(f.rate_spectral)
     << "\n";
  os << "  sense1 (operator rate < 1): " << detail::yesno(f.sense1)
     << "  sense2 (< contraction rate): " << detail::yesno(f.sense2) << "\n";
  if (f.witness.t >= 0)
    os << "  binding constraint: " << f.witness.constraint << " at slice "
       << f.witness.t << ", pair (" << f.witness.i << "," << f.witness.j
       << "), state " << f.witness.state << "\n";
  else
    os << "  binding constraint: none (kernel matches the base exactly)\n";
  os << "  pair-kernel domination max ratio: "
     << fmt_g9(f.domination_max_ratio) << " (cap (1+delta) = "
     << fmt_g9(1.0 + f.delta) << ")\n";
  return os.str();
}

}  // namespace mixbound
