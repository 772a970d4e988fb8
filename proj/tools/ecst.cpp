// ecst: sweeps, figure data, validation report and the branch table.
//
// Exit codes: 0 ok, 1 invariant violation, 2 bad input, 3 io error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecst/formulas.hpp"
#include "ecst/pipeline.hpp"
#include "ecst/sweep.hpp"
#include "ecst/validation.hpp"

namespace {

using namespace ecst;

enum Exit { kOk = 0, kInvariant = 1, kBadInput = 2, kIo = 3 };

struct GridFlags {
  std::vector<double> alpha_sq;
  std::vector<double> theta;
  std::vector<double> phi;
  std::string grid_file;
  double tail = 0.0;
  std::string out;
  std::string format;
  unsigned threads = 0;
};

void add_grid_flags(CLI::App* cmd, GridFlags& f) {
  cmd->add_option("--alpha-sq", f.alpha_sq, "Comma-separated |alpha|^2 values")->delimiter(',');
  cmd->add_option("--theta", f.theta, "Comma-separated Bloch theta values (radians)")->delimiter(',');
  cmd->add_option("--phi", f.phi, "Comma-separated Bloch phi values (radians)")->delimiter(',');
  cmd->add_option("--grid", f.grid_file, "JSON config file with the sweep fields");
  cmd->add_option("--tail", f.tail, "Truncation tail bound, in (0, 1e-6]");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--format", f.format, "csv or json");
  cmd->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Defaults, then the config file, then explicit flags.
SweepConfig resolve(const GridFlags& f) {
  SweepConfig c = f.grid_file.empty() ? SweepConfig::defaults() : parse_config(read_file(f.grid_file));
  if (!f.alpha_sq.empty()) c.alpha_sq_grid = f.alpha_sq;
  if (!f.theta.empty()) c.theta_grid = f.theta;
  if (!f.phi.empty()) c.phi_grid = f.phi;
  if (f.tail != 0.0) c.truncation_tail = f.tail;
  if (!f.out.empty()) c.outputs = f.out;
  if (!f.format.empty()) c.format = parse_format(f.format);
  c.validate();
  return c;
}

std::string ext(const SweepConfig& c) { return c.format == OutputFormat::csv ? ".csv" : ".json"; }

int cmd_sweep(const GridFlags& f) {
  const SweepConfig cfg = resolve(f);
  const SweepResult r = run_sweep(cfg, f.threads);
  const auto path = std::filesystem::path(cfg.outputs) / ("sweep" + ext(cfg));
  write_text(path, render(r, cfg.format));
  std::cout << "wrote " << path.string() << " (" << r.rows.size() << " rows)\n";
  return kOk;
}

int cmd_figures(const GridFlags& f) {
  const SweepConfig cfg = resolve(f);
  const SweepResult r = run_sweep(cfg, f.threads);
  for (const auto& p : write_figures(r, cfg)) std::cout << "wrote " << p.string() << "\n";
  return kOk;
}

nlohmann::ordered_json point_json(const GridPoint& p) {
  return {{"alpha_sq", p.alpha_sq}, {"theta", p.theta}, {"phi", p.phi}};
}

/// Infinite deviations (non-finite reference values) serialise as null.
nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json report_json(const validation::ValidationReport& r, const SweepConfig& cfg) {
  nlohmann::ordered_json j;
  j["ok"] = r.ok();
  j["grid_points"] = r.grid_points;
  j["truncation_tail"] = cfg.truncation_tail;
  j["flag_tolerance"] = validation::kFlagTolerance;
  j["point_errors"] = r.point_errors;
  auto& inv = j["invariants"] = nlohmann::ordered_json::array();
  for (const auto& s : r.invariants) {
    inv.push_back({{"name", s.name}, {"ok", s.ok}, {"worst", number_or_null(s.worst)}, {"tolerance", s.tolerance},
                   {"worst_point", point_json(s.worst_point)}});
  }
  auto& fl = j["flags"] = nlohmann::ordered_json::array();
  auto& ag = j["agreements"] = nlohmann::ordered_json::array();
  for (const auto& s : r.formulas) {
    nlohmann::ordered_json e{{"check", s.name},
                             {"description", s.description},
                             {"points", s.points},
                             {"deviating_points", s.deviating_points},
                             {"max_rel_deviation", number_or_null(s.max_rel_deviation)},
                             {"worst_point", point_json(s.worst)},
                             {"reference_at_worst", number_or_null(s.reference_at_worst)},
                             {"oracle_at_worst", number_or_null(s.oracle_at_worst)}};
    (s.flagged ? fl : ag).push_back(std::move(e));
  }
  auto& cl = j["claims"] = nlohmann::ordered_json::array();
  for (const auto& c : r.claims) {
    cl.push_back({{"claim", c.claim}, {"statement", c.statement}, {"holds", c.holds}, {"detail", c.detail}});
  }
  auto& ob = j["observations"] = nlohmann::ordered_json::array();
  for (const auto& o : r.observations) ob.push_back({{"name", o.name}, {"holds", o.holds}, {"detail", o.detail}});
  return j;
}

std::string report_text(const validation::ValidationReport& r) {
  std::ostringstream os;
  os << "grid points: " << r.grid_points << "\n\ninvariants\n";
  for (const auto& s : r.invariants) {
    os << "  " << (s.ok ? "ok   " : "FAIL ") << s.name << "  worst " << validation::fmt(s.worst, 3) << " (tol "
       << validation::fmt(s.tolerance, 3) << ")\n";
  }
  for (const auto& e : r.point_errors) os << "  FAIL evaluation " << e << "\n";
  const auto flags = r.flags();
  os << "\nflags (" << flags.size() << " checks deviate beyond " << validation::fmt(validation::kFlagTolerance, 3)
     << " relative)\n";
  for (const auto* s : flags) {
    os << "  " << s->name << ": " << s->deviating_points << "/" << s->points << " points, max rel dev "
       << validation::fmt(s->max_rel_deviation, 3) << " at alpha_sq=" << validation::fmt(s->worst.alpha_sq)
       << " (reference " << validation::fmt(s->reference_at_worst, 8) << ", oracle "
       << validation::fmt(s->oracle_at_worst, 8) << ")\n";
  }
  os << "\nagreeing checks\n";
  for (const auto& s : r.formulas) {
    if (!s.flagged && s.points > 0) {
      os << "  " << s.name << ": max rel dev " << validation::fmt(s.max_rel_deviation, 3) << "\n";
    }
  }
  os << "\nclaims\n";
  for (const auto& c : r.claims) {
    os << "  " << (c.holds ? "holds   " : "refuted ") << c.claim << ": " << c.detail << "\n";
  }
  os << "\nobservations\n";
  for (const auto& o : r.observations) os << "  " << (o.holds ? "holds   " : "fails   ") << o.name << ": " << o.detail << "\n";
  os << "\nresult: " << (r.ok() ? "all invariants hold" : "INVARIANT VIOLATION") << "\n";
  return os.str();
}

int cmd_validate(const GridFlags& f) {
  const SweepConfig cfg = resolve(f);
  const auto report = validation::run_validation(cfg.points(), cfg.truncation_tail, validation::default_formula_checks(),
                                                 validation::default_invariants(), f.threads);
  const std::string text = report_text(report);
  std::cout << text;
  const auto dir = std::filesystem::path(cfg.outputs);
  write_text(dir / "validation_report.json", report_json(report, cfg).dump(2) + "\n");
  write_text(dir / "validation_report.txt", text);
  if (!report.ok()) {
    for (const auto& s : report.invariants) {
      if (!s.ok) std::cerr << "invariant violated: " << s.name << "\n";
    }
    for (const auto& e : report.point_errors) std::cerr << "evaluation failed: " << e << "\n";
    return kInvariant;
  }
  return kOk;
}

std::string bob_descriptor(CaseId c) {
  switch (c) {
    case CaseId::i: return "|ODD,a/sqrt2>";
    case CaseId::ii: return "e+|a/sqrt2> - e-|-a/sqrt2>";
    case CaseId::iii: return "-e+|-a/sqrt2> + e-|a/sqrt2>";
    case CaseId::iv: return "e+|a/sqrt2> + e-|-a/sqrt2>";
    case CaseId::v: return "-e+|-a/sqrt2> - e-|a/sqrt2>";
  }
  return "?";
}

std::string output_descriptor(CaseId c) {
  if (c == CaseId::i) return "-";
  return sign_of(c) == Sign::minus ? "|I,0> - |0,I>" : "|I,0> + |0,I>";
}

int cmd_branch_table(double alpha_sq, double theta, double phi, double tail, const std::string& out,
                     const std::string& format) {
  const OutputFormat fmt = parse_format(format.empty() ? "csv" : format);
  if (!(tail > 0.0) || tail > 1e-6) throw Error(ErrorCode::invalid_input, "tail must lie in (0, 1e-6]");
  const InformationSpec info = information_at({alpha_sq, theta, phi});
  const auto alice = alice_stage(info, build_channel(info.alpha), tail);

  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "case,detector_3,detector_4,probability,probability_closed_form,bob_state,cps,mixing_cat,b2_output\n";
  double total = 0.0;
  for (const auto& b : alice.branches) {
    const double closed = formulas::branch_probability(b.case_id, info.x, info.prob_i0);
    total += b.probability;
    csv << to_string(b.case_id) << "," << to_string(b.class3) << "," << to_string(b.class4) << ","
        << format_number(b.probability) << "," << format_number(closed) << ",\"" << bob_descriptor(b.case_id)
        << "\"," << (b.case_id == CaseId::i ? "-" : to_string(b.cps)) << "," << to_string(b.mixing_cat) << ",\""
        << output_descriptor(b.case_id) << "\"\n";
    rows.push_back({{"case", to_string(b.case_id)},
                    {"detector_3", to_string(b.class3)},
                    {"detector_4", to_string(b.class4)},
                    {"probability", b.probability},
                    {"probability_closed_form", closed},
                    {"bob_state", bob_descriptor(b.case_id)},
                    {"cps", b.case_id == CaseId::i ? "-" : to_string(b.cps)},
                    {"mixing_cat", to_string(b.mixing_cat)},
                    {"b2_output", output_descriptor(b.case_id)}});
  }
  const std::string text = fmt == OutputFormat::csv ? csv.str() : rows.dump(2) + "\n";
  std::cout << text;
  std::cerr << "sum of probabilities: " << format_number(total) << "\n";
  if (!out.empty()) {
    write_text(std::filesystem::path(out) / (std::string("branch_table") + (fmt == OutputFormat::csv ? ".csv" : ".json")),
               text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cat-state teleportation over an unequal-amplitude entangled coherent channel"};
  app.require_subcommand(1);

  GridFlags sweep_f, figures_f, validate_f;
  auto* sweep = app.add_subcommand("sweep", "Evaluate the grid and write one row per point");
  add_grid_flags(sweep, sweep_f);
  auto* figures = app.add_subcommand("figures", "Write the per-figure data files");
  add_grid_flags(figures, figures_f);
  auto* validate = app.add_subcommand("validate", "Compare every reference formula with the simulator");
  add_grid_flags(validate, validate_f);

  double bt_alpha_sq = 10.0, bt_theta = kPi / 2, bt_phi = 0.0, bt_tail = 1e-12;
  std::string bt_out, bt_format;
  auto* table = app.add_subcommand("branch-table", "Print Alice's five counting branches at one point");
  table->add_option("--alpha-sq", bt_alpha_sq, "|alpha|^2");
  table->add_option("--theta", bt_theta, "Bloch theta (radians)");
  table->add_option("--phi", bt_phi, "Bloch phi (radians)");
  table->add_option("--tail", bt_tail, "Truncation tail bound");
  table->add_option("--out", bt_out, "Also write the table into this directory");
  table->add_option("--format", bt_format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_f);
    if (*figures) return cmd_figures(figures_f);
    if (*validate) return cmd_validate(validate_f);
    if (*table) return cmd_branch_table(bt_alpha_sq, bt_theta, bt_phi, bt_tail, bt_out, bt_format);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::io_failure ? kIo : kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
