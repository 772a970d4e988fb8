#pragma once

// Grid sweeps: configuration, one scalar row per grid point, CSV/JSON
// writers and the per-figure projections.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecst/formulas.hpp"
#include "ecst/grid.hpp"
#include "ecst/pipeline.hpp"
#include "ecst/validation.hpp"

namespace ecst {

enum class OutputFormat { csv, json };

inline const char* to_string(OutputFormat f) { return f == OutputFormat::csv ? "csv" : "json"; }

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw Error(ErrorCode::invalid_input, "format must be csv or json, got '" + s + "'");
}

struct SweepConfig {
  std::vector<double> alpha_sq_grid;
  std::vector<double> theta_grid;
  std::vector<double> phi_grid;
  double truncation_tail = 1e-12;
  std::string outputs = "out";
  OutputFormat format = OutputFormat::csv;

  /// |alpha|^2 in 0.5..30 step 0.5, theta in 0..pi step pi/8, phi in {0, pi/2}.
  static SweepConfig defaults() {
    SweepConfig c;
    for (int i = 1; i <= 60; ++i) c.alpha_sq_grid.push_back(0.5 * i);
    for (int k = 0; k <= 8; ++k) c.theta_grid.push_back(kPi * k / 8.0);
    c.phi_grid = {0.0, kPi / 2.0};
    return c;
  }

  void validate() const {
    if (alpha_sq_grid.empty() || theta_grid.empty() || phi_grid.empty()) {
      throw Error(ErrorCode::invalid_input, "grids must be non-empty");
    }
    for (double a : alpha_sq_grid) {
      if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::invalid_input, "alpha_sq values must be > 0");
    }
    for (const auto* g : {&theta_grid, &phi_grid}) {
      for (double v : *g) {
        if (!std::isfinite(v)) throw Error(ErrorCode::invalid_input, "angles must be finite");
      }
    }
    if (!(truncation_tail > 0.0) || truncation_tail > 1e-6) {
      throw Error(ErrorCode::invalid_input, "truncation_tail must lie in (0, 1e-6]");
    }
  }

  std::vector<GridPoint> points() const { return grid_product(alpha_sq_grid, theta_grid, phi_grid); }

  bool operator==(const SweepConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const SweepConfig& c) {
  j = nlohmann::json{{"alpha_sq_grid", c.alpha_sq_grid}, {"theta_grid", c.theta_grid},
                     {"phi_grid", c.phi_grid},           {"truncation_tail", c.truncation_tail},
                     {"outputs", c.outputs},             {"format", to_string(c.format)}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, SweepConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "config must be a JSON object");
  static const std::vector<std::string> known{"alpha_sq_grid", "theta_grid", "phi_grid",
                                              "truncation_tail", "outputs",   "format"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw Error(ErrorCode::invalid_input, "unknown config key '" + k + "'");
    }
  }
  try {
    if (j.contains("alpha_sq_grid")) c.alpha_sq_grid = j.at("alpha_sq_grid").get<std::vector<double>>();
    if (j.contains("theta_grid")) c.theta_grid = j.at("theta_grid").get<std::vector<double>>();
    if (j.contains("phi_grid")) c.phi_grid = j.at("phi_grid").get<std::vector<double>>();
    if (j.contains("truncation_tail")) c.truncation_tail = j.at("truncation_tail").get<double>();
    if (j.contains("outputs")) c.outputs = j.at("outputs").get<std::string>();
    if (j.contains("format")) c.format = parse_format(j.at("format").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, std::string("config: ") + e.what());
  }
}

inline SweepConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_input, std::string("config is not valid JSON: ") + e.what());
  }
  SweepConfig c = SweepConfig::defaults();
  from_json(j, c);
  c.validate();
  return c;
}

inline std::string serialize_config(const SweepConfig& c) { return nlohmann::json(c).dump(2); }

// ---------------------------------------------------------------------------
// Rows

using Cell = std::optional<double>;

struct SweepRow {
  GridPoint point;
  std::vector<Cell> values;         // aligned with SweepResult::columns
  std::vector<std::string> flags;   // deviating checks and null reasons
};

struct SweepResult {
  std::vector<std::string> columns;
  std::vector<SweepRow> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw Error(ErrorCode::invalid_input, "no column " + name);
  }
};

/// Column names in output order (the grid coordinates come first).
inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"alpha_sq", "theta", "phi", "x", "p_i0", "concurrence", "concurrence_closed_form",
                               "p_case_i", "p_case_ii", "p_case_iii", "p_case_iv", "p_case_v", "p_plus", "p_minus",
                               "f_case_i", "f_case_i_closed_form"};
    for (const char* s : {"minus", "plus"}) {
      for (const char* q : {"p_l", "p_u", "p_a", "f_a", "p_b", "f_b", "p_cl", "f_cl", "p_cu", "f_cu", "joint_a",
                            "joint_b", "joint_cl", "joint_cu"}) {
        c.push_back(std::string(q) + "_" + s);
      }
    }
    for (const char* q : {"s1", "s2", "s3_re", "s3_im", "f_avg_exact", "f_avg_sum", "f_avg_simplified",
                          "f_avg_simplified_rederived", "f_avg_expansion", "f_avg_asymptote"}) {
      c.push_back(q);
    }
    return c;
  }();
  return cols;
}

/// Non-finite values become nulls with a flag. The coordinates are the grid
/// point's own (|sqrt(a)|^2 need not round-trip).
inline SweepRow make_row(const PointEvaluation& pe, const GridPoint& point, const std::vector<std::string>& deviating) {
  using namespace formulas;
  SweepRow row;
  row.point = point;
  row.flags = deviating;
  auto& v = row.values;
  auto put = [&](const std::string& name, Cell c) {
    if (c && !std::isfinite(*c)) {
      row.flags.push_back("non-finite:" + name);
      c.reset();
    }
    v.push_back(c);
  };
  const auto& info = pe.info;
  put("alpha_sq", point.alpha_sq);
  put("theta", point.theta);
  put("phi", point.phi);
  put("x", info.x);
  put("p_i0", info.prob_i0);
  put("concurrence", pe.concurrence);
  put("concurrence_closed_form", channel_concurrence(info.x));
  for (CaseId c : {CaseId::i, CaseId::ii, CaseId::iii, CaseId::iv, CaseId::v}) {
    put(std::string("p_case_") + to_string(c), pe.branch(c).probability);
  }
  put("p_plus", pe.branch(CaseId::ii).probability);
  put("p_minus", pe.branch(CaseId::iv).probability);
  put("f_case_i", pe.case_i.simulated);
  put("f_case_i_closed_form", pe.case_i.closed_form);

  for (Sign s : {Sign::minus, Sign::plus}) {
    const CaseId first = s == Sign::minus ? CaseId::ii : CaseId::iv;
    const CaseId second = s == Sign::minus ? CaseId::iii : CaseId::v;
    const auto& b = pe.branch(first);
    const bool live = b.cavity_c.has_value();
    auto cond = [&](auto f) -> Cell { return live ? Cell(f(*b.cavity_c)) : std::nullopt; };
    const std::string sfx = s == Sign::minus ? "_minus" : "_plus";
    put("p_l" + sfx, cond([](const CavityCResult& c) { return c.prob_l; }));
    put("p_u" + sfx, cond([](const CavityCResult& c) { return c.prob_u; }));
    put("p_a" + sfx, cond([](const CavityCResult& c) { return c.a.probability; }));
    put("f_a" + sfx, live && b.cavity_c->a.teleported_state ? Cell(b.cavity_c->a.fidelity) : std::nullopt);
    put("p_b" + sfx, cond([](const CavityCResult& c) { return c.prob_b_total; }));
    put("f_b" + sfx, live && !b.cavity_c->b.empty() ? Cell(b.cavity_c->b.front().fidelity) : std::nullopt);
    const bool second_cavity = b.cavity_cprime.has_value();
    put("p_cl" + sfx, second_cavity ? Cell(b.cavity_cprime->c_l.probability) : std::nullopt);
    put("f_cl" + sfx, second_cavity && b.cavity_cprime->c_l.teleported_state ? Cell(b.cavity_cprime->c_l.fidelity)
                                                                       : std::nullopt);
    put("p_cu" + sfx, second_cavity ? Cell(b.cavity_cprime->c_u.probability) : std::nullopt);
    put("f_cu" + sfx, second_cavity && b.cavity_cprime->c_u.teleported_state ? Cell(b.cavity_cprime->c_u.fidelity)
                                                                       : std::nullopt);
    // Joint probabilities summed over both members of the family.
    put("joint_a" + sfx, situation_probability(pe, first, Situation::A) + situation_probability(pe, second, Situation::A));
    put("joint_b" + sfx, situation_probability(pe, first, Situation::B) + situation_probability(pe, second, Situation::B));
    put("joint_cl" + sfx,
        situation_probability(pe, first, Situation::C_l) + situation_probability(pe, second, Situation::C_l));
    put("joint_cu" + sfx,
        situation_probability(pe, first, Situation::C_u) + situation_probability(pe, second, Situation::C_u));
  }
  put("s1", pe.terms.s1);
  put("s2", pe.terms.s2);
  put("s3_re", pe.terms.s3.real());
  put("s3_im", pe.terms.s3.imag());
  put("f_avg_exact", pe.f_avg);
  put("f_avg_sum", avg_fidelity_from_parts(info, pe.terms, true));
  put("f_avg_simplified", avg_fidelity_simplified(info, pe.terms));
  put("f_avg_simplified_rederived", avg_fidelity_simplified_rederived(info, pe.terms));
  put("f_avg_expansion", avg_fidelity_expansion(info));
  put("f_avg_asymptote", avg_fidelity_asymptotic(info.mean_photons()));
  return row;
}

/// Evaluates every grid point; a point whose evaluation fails gets an
/// all-null row (coordinates kept) and the error as its flag.
inline SweepResult run_sweep(const SweepConfig& cfg, unsigned threads = 0) {
  cfg.validate();
  const auto points = cfg.points();
  const auto checks = validation::default_formula_checks();
  const auto invariants = validation::default_invariants();
  auto rows = parallel_map(
      points,
      [&](const GridPoint& p) {
        const PointEvaluation pe = evaluate_point(information_at(p), cfg.truncation_tail);
        const auto d = validation::digest(pe, checks, invariants);
        return make_row(pe, p, validation::flags_at(d, checks));
      },
      threads);
  SweepResult r;
  r.columns = sweep_columns();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (rows[i].value) {
      r.rows.push_back(std::move(*rows[i].value));
      continue;
    }
    SweepRow row;
    row.point = points[i];
    row.values.assign(r.columns.size(), std::nullopt);
    row.values[0] = points[i].alpha_sq;
    row.values[1] = points[i].theta;
    row.values[2] = points[i].phi;
    row.flags.push_back("error:" + rows[i].error);
    r.rows.push_back(std::move(row));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Writers

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

/// Subset of columns (all when empty); `with_flags` appends the flag list.
inline std::string to_csv(const SweepResult& r, const std::vector<std::string>& cols = {}, bool with_flags = true) {
  const auto& names = cols.empty() ? r.columns : cols;
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(r.column(n));
  std::ostringstream os;
  os << join(names, ",") << (with_flags ? ",flags" : "") << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& c = row.values[idx[i]];
      os << (i ? "," : "") << (c ? format_number(*c) : "null");
    }
    if (with_flags) os << "," << join(row.flags, ";");
    os << "\n";
  }
  return os.str();
}

inline std::string to_json_text(const SweepResult& r, const std::vector<std::string>& cols = {},
                                bool with_flags = true) {
  const auto& names = cols.empty() ? r.columns : cols;
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(r.column(n));
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto& c = row.values[idx[i]];
      if (c) o[names[i]] = *c;
      else o[names[i]] = nullptr;
    }
    if (with_flags) o["flags"] = row.flags;
    rows.push_back(std::move(o));
  }
  return rows.dump(2) + "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io_failure, "write to " + path.string() + " failed");
}

inline std::string render(const SweepResult& r, OutputFormat f, const std::vector<std::string>& cols = {},
                          bool with_flags = true) {
  return f == OutputFormat::csv ? to_csv(r, cols, with_flags) : to_json_text(r, cols, with_flags);
}

struct FigureSpec {
  std::string name;
  std::vector<std::string> columns;
};

inline const std::vector<FigureSpec>& figure_specs() {
  static const std::vector<FigureSpec> specs{
      {"fig1_concurrence", {"alpha_sq", "concurrence", "concurrence_closed_form"}},
      {"fig2_case_i_prob", {"alpha_sq", "theta", "phi", "p_case_i"}},
      {"fig3_branch_probs", {"alpha_sq", "theta", "phi", "p_plus", "p_minus"}},
      {"fig5_vnm_probs", {"alpha_sq", "theta", "phi", "p_l_minus", "p_u_minus", "p_l_plus", "p_u_plus"}},
      {"fig6_fidelity_A", {"alpha_sq", "theta", "phi", "f_a_minus", "f_a_plus"}},
      {"fig7_fidelity_Cl", {"alpha_sq", "theta", "phi", "f_cl_minus", "f_cl_plus"}},
      {"fig8_avg_fidelity", {"alpha_sq", "theta", "phi", "f_avg_exact", "f_avg_expansion", "f_avg_asymptote"}},
  };
  return specs;
}

/// Concurrence does not depend on the information, so its figure keeps the
/// first row of each |alpha|^2.
inline SweepResult unique_alpha_rows(const SweepResult& r) {
  SweepResult out;
  out.columns = r.columns;
  for (const auto& row : r.rows) {
    if (out.rows.empty() || out.rows.back().point.alpha_sq != row.point.alpha_sq) out.rows.push_back(row);
  }
  return out;
}

/// Writes one file per figure into cfg.outputs; returns the paths written.
inline std::vector<std::filesystem::path> write_figures(const SweepResult& r, const SweepConfig& cfg) {
  std::vector<std::filesystem::path> written;
  const std::string ext = cfg.format == OutputFormat::csv ? ".csv" : ".json";
  for (const auto& f : figure_specs()) {
    const SweepResult& src = f.name == "fig1_concurrence" ? unique_alpha_rows(r) : r;
    const auto path = std::filesystem::path(cfg.outputs) / (f.name + ext);
    write_text(path, render(src, cfg.format, f.columns, false));
    written.push_back(path);
  }
  return written;
}

}  // namespace ecst
