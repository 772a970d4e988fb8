// Acceptance suite: one PASS/FAIL line per criterion.
//
//   ecst_acceptance                 all criteria
//   ecst_acceptance --criterion 4   just one
//   --cli <path>                    ecst binary, needed by criterion 9
//
// Exit status is non-zero when any selected criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecst/pipeline.hpp"
#include "ecst/sweep.hpp"

using namespace ecst;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

std::string at(const GridPoint& p) {
  return "(alpha_sq=" + g(p.alpha_sq) + ", theta=" + g(p.theta, 4) + ", phi=" + g(p.phi, 4) + ")";
}

const std::vector<GridPoint>& default_grid() {
  static const auto pts = SweepConfig::defaults().points();
  return pts;
}

Outcome headline_fidelity() {
  const double mu[3] = {10, 20, 30};
  const double quoted[3] = {0.947, 0.971, 0.980};
  Outcome o{true, ""};
  for (int i = 0; i < 3; ++i) {
    const double f = evaluate_point(information_at({mu[i], kPi / 2, 0.0})).f_avg;
    o.pass = o.pass && std::abs(f - quoted[i]) <= 0.010;
    o.detail += "F(" + g(mu[i]) + ")=" + g(f) + " vs " + g(quoted[i]) + "; ";
  }
  return o;
}

Outcome asymptotic_law() {
  std::vector<double> lx, ly;
  std::string d;
  for (double mu : {10.0, 15.0, 20.0, 25.0, 30.0}) {
    const double f = evaluate_point(information_at({mu, kPi / 2, 0.0})).f_avg;
    const double r = std::abs(f - formulas::avg_fidelity_asymptotic(mu));
    lx.push_back(std::log(mu));
    ly.push_back(std::log(r));
    d += "|dF(" + g(mu) + ")|=" + g(r, 3) + " ";
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope <= -1.5, "slope " + g(slope, 4) + " (need <= -1.5); " + d};
}

Outcome concurrence_agreement() {
  Outcome o{true, ""};
  for (double x : {0.9, 0.5, 0.1, 0.01}) {
    const double a = std::sqrt(-std::log(x));
    const double c = channel_concurrence_general(a);
    const double dev = std::abs(c - formulas::channel_concurrence(x));
    o.pass = o.pass && dev <= 1e-12;
    o.detail += "x=" + g(x) + ": |dC|=" + g(dev, 2) + "; ";
  }
  return o;
}

Outcome concurrence_at_three() {
  const double c = channel_concurrence_general(std::sqrt(3.0));
  return {c >= 0.999, "C(|alpha|^2=3) = " + g(c, 8) + " (need >= 0.999)"};
}

Outcome branch_probabilities() {
  double worst = 0.0, worst_sum = 0.0;
  GridPoint wp{};
  for (const auto& p : default_grid()) {
    const auto info = information_at(p);
    const auto alice = alice_stage(info, build_channel(info.alpha));
    double total = 0.0;
    for (const auto& b : alice.branches) {
      const double dev = std::abs(b.probability - formulas::branch_probability(b.case_id, info.x, info.prob_i0));
      if (dev > worst) {
        worst = dev;
        wp = p;
      }
      total += b.probability;
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  const auto pe = evaluate_point(information_at({10.0, kPi / 2, 0.0}));
  const double pp = pe.branch(CaseId::ii).probability;
  const double pm = pe.branch(CaseId::iv).probability;
  const bool plateau = pp >= 0.249 && pp <= 0.251 && pm >= 0.249 && pm <= 0.251;
  return {worst <= 1e-9 && worst_sum <= 1e-9 && plateau,
          std::to_string(default_grid().size()) + " points; max |dP| " + g(worst, 3) + " at " + at(wp) +
              "; max |sum-1| " + g(worst_sum, 3) + "; P+(10)=" + g(pp, 8) + " P-(10)=" + g(pm, 8)};
}

Outcome situation_a_contract() {
  double wp = 0.0, wf = 0.0;
  GridPoint at_p{}, at_f{};
  std::size_t seen = 0;
  for (const auto& gp : default_grid()) {
    const auto pe = evaluate_point(information_at(gp));
    for (CaseId c : {CaseId::ii, CaseId::iii}) {
      const auto& b = pe.branch(c);
      if (!b.cavity_c) continue;
      ++seen;
      const double dp = std::abs(b.cavity_c->a.probability - 0.5);
      const double df = std::abs(b.cavity_c->a.fidelity - (1.0 - pe.info.prob_i0));
      if (dp > wp) wp = dp, at_p = gp;
      if (df > wf) wf = df, at_f = gp;
    }
  }
  return {wp <= 1e-9 && wf <= 1e-9 && seen > 0,
          std::to_string(seen) + " branches; max |P(-|A) - 1/2| " + g(wp, 3) + " at " + at(at_p) +
              "; max |F(-,A) - (1 - P_I0)| " + g(wf, 3) + " at " + at(at_f)};
}

Outcome b_suppression() {
  double worst = 0.0;
  GridPoint wp{};
  for (const auto& p : default_grid()) {
    if (p.alpha_sq < 5.0) continue;
    const auto pe = evaluate_point(information_at(p));
    for (CaseId c : {CaseId::ii, CaseId::iv}) {
      const auto& b = pe.branch(c);
      if (!b.cavity_c) continue;
      double sum = 0.0;
      for (const auto& o : b.cavity_c->b) sum += o.probability;
      if (sum > worst) worst = sum, wp = p;
    }
  }
  return {worst <= 1e-3, "max over |alpha|^2 >= 5 of sum_n P(B_n) = " + g(worst, 4) + " at " + at(wp) +
                             " (need <= 1e-3)"};
}

Outcome recovery_fidelity() {
  Outcome o{true, ""};
  for (double theta : {kPi / 4, kPi / 2, 3 * kPi / 4}) {
    const auto pe = evaluate_point(information_at({10.0, theta, 0.0}));
    for (CaseId c : {CaseId::ii, CaseId::iv}) {
      const auto& cp = pe.branch(c).cavity_cprime;
      const double f = cp && cp->c_l.teleported_state ? cp->c_l.fidelity : 0.0;
      o.pass = o.pass && f >= 0.99;
      o.detail += "theta=" + g(theta, 4) + " " + (c == CaseId::ii ? "-" : "+") + ": " + g(f) + "; ";
    }
  }
  return o;
}

// Property suite --------------------------------------------------------------

double splitter_unitarity() {
  const std::size_t d = 16;
  std::vector<FockState> out;
  for (std::size_t n = 0; n < d; ++n) {
    for (std::size_t m = 0; n + m < d; ++m) {
      out.push_back(beamsplitter(
          tensor({FockState::number_state("a", d, n), FockState::number_state("b", d, m)}), "a", "b"));
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i; j < out.size(); ++j) {
      worst = std::max(worst, std::abs(inner(out[i], out[j]) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

double jc_conservation() {
  double worst = 0.0;
  for (double a : {1.0, 2.5, 4.0}) {
    const auto p = TruncationPolicy::for_mean(a * a);
    const auto params = JcParams::for_alpha(a);
    for (auto atom : {AtomState::ground(), AtomState{std::sqrt(0.4), cplx(0.0, std::sqrt(0.6))}}) {
      const auto in = tensor({cat_state(a, Parity::even, p, "f"), atom.as_mode("q")});
      const auto out = jc_evolve(in, "f", "q", params);
      auto exc = [](const FockState& s) {
        const auto wf = s.level_weights("f");
        double n = s.level_weights("q")[1];
        for (std::size_t k = 0; k < wf.size(); ++k) n += static_cast<double>(k) * wf[k];
        return n;
      };
      worst = std::max({worst, std::abs(exc(out) - exc(in)), std::abs(out.norm_sq() - in.norm_sq())});
    }
  }
  return worst;
}

double projector_completeness() {
  double worst = 0.0;
  for (double mu : {0.5, 5.0, 20.0}) {
    const auto p = TruncationPolicy::for_mean(2.0 * mu);
    const double a = std::sqrt(mu);
    const auto mixed = beamsplitter(tensor({coherent_state(a, p, "a"), cat_state(a, Parity::odd, p, "b")}), "a", "b");
    double total = 0.0;
    for (auto c : {PhotonClass::zero, PhotonClass::nze, PhotonClass::odd}) {
      total += measure_photon_class(mixed, "a", c).probability;
    }
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

double normalisation_by_summation() {
  double worst = 0.0;
  for (double mu : {0.5, 3.0, 12.0, 30.0}) {
    for (double theta : {0.0, 1.0, 2.0, kPi}) {
      const auto info = information_at({mu, theta, 0.7});
      const auto p = TruncationPolicy::for_mean(mu, 1e-14);
      double s = 0.0;
      for (auto c : info.fock_coefficients(p.dim)) s += std::norm(c);
      worst = std::max(worst, std::abs(s - 1.0));
    }
  }
  return worst;
}

double representation_commutation() {
  double worst = 0.0;
  for (double mu : {0.5, 4.0, 15.0}) {
    const auto info = information_at({mu, 1.3, 0.4});
    const auto joint = tensor(info.as_superposition("0"), build_channel(info.alpha));
    const auto p = TruncationPolicy::for_mean(2.0 * mu);
    const auto via_fock = beamsplitter(to_fock(joint, p), "0", "1", "3", "4");
    const auto via_labels = to_fock(apply_beamsplitter(joint, "0", "1", "3", "4"), p);
    worst = std::max(worst, 1.0 - fidelity(via_fock, via_labels));
  }
  return worst;
}

double sums_identity() {
  double worst = 0.0;
  for (const auto& p : default_grid()) {
    if (p.phi != 0.0) continue;
    const auto info = information_at(p);
    const auto t = formulas::exact_sums(info, JcParams::for_alpha(info.alpha));
    worst = std::max(worst, std::abs(t.s1 + t.s2 - (1.0 - info.prob_i0)));
  }
  return worst;
}

double moment_identities() {
  double worst = 0.0;
  for (double mu : {0.5, 2.0, 8.0, 20.0, 30.0}) {
    for (double theta : {0.3, kPi / 2, 2.8}) {
      const auto info = information_at({mu, theta, 0.0});
      for (unsigned m = 1; m <= 6; ++m) {
        const double c = formulas::factorial_moment_closed(info, m);
        worst = std::max(worst, std::abs(formulas::factorial_moment(info, m) - c) / std::max(1.0, std::abs(c)));
      }
      for (unsigned k = 1; k <= 3; ++k) {
        const double c = formulas::y_moment_closed(info, k);
        worst = std::max(worst, std::abs(formulas::y_moment(info, k) - c) / std::max(1.0, std::abs(c)));
      }
    }
  }
  return worst;
}

Outcome property_suite() {
  struct Prop {
    const char* name;
    std::function<double()> run;
    double tol;
  };
  const Prop props[] = {
      {"splitter-unitarity", splitter_unitarity, 1e-12},
      {"jc-excitation-conservation", jc_conservation, 1e-12},
      {"projector-completeness", projector_completeness, 1e-9},
      {"normalisation-by-summation", normalisation_by_summation, 1e-10},
      {"representation-commutation", representation_commutation, 1e-9},
      {"s1-plus-s2", sums_identity, 1e-10},
      {"moment-identities", moment_identities, 1e-8},
  };
  Outcome o{true, ""};
  for (const auto& p : props) {
    const double v = p.run();
    const bool ok = v <= p.tol;
    o.pass = o.pass && ok;
    o.detail += std::string(p.name) + " " + g(v, 2) + (ok ? "" : " FAIL") + "; ";
  }
  return o;
}

Outcome validate_ledger(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli path given"};
  const auto dir = std::filesystem::temp_directory_path() / "ecst_acceptance_validate";
  std::filesystem::remove_all(dir);
  const std::string cmd = "\"" + cli + "\" validate --out \"" + dir.string() + "\" > \"" + (dir.string() + ".log") + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(dir / "validation_report.json");
  if (!in) return {false, "exit " + std::to_string(code) + ", no report written"};
  const auto report = nlohmann::json::parse(in);
  std::vector<std::string> names;
  for (const auto& f : report.at("flags")) names.push_back(f.at("check").get<std::string>());
  const char* expected[] = {"fock-coefficients", "odd-cat-weight", "ground-probability (-)", "ground-probability (+)"};
  std::string missing;
  for (const char* e : expected) {
    if (std::find(names.begin(), names.end(), e) == names.end()) missing += std::string(" ") + e;
  }
  std::string listed;
  for (const auto& n : names) listed += (listed.empty() ? "" : ", ") + n;
  return {code == 0 && missing.empty() && report.at("ok").get<bool>(),
          "exit " + std::to_string(code) + "; " + std::to_string(names.size()) + " flags: " + listed +
              (missing.empty() ? "" : "; missing:" + missing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string only, cli;
  app.add_option("--criterion", only, "1, 2, 3a, 3b, 4, 5, 6, 7, 8 or 9");
  app.add_option("--cli", cli, "path to the ecst binary");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1", headline_fidelity},
      {"2", asymptotic_law},
      {"3a", concurrence_agreement},
      {"3b", concurrence_at_three},
      {"4", branch_probabilities},
      {"5", situation_a_contract},
      {"6", b_suppression},
      {"7", recovery_fidelity},
      {"8", property_suite},
      {"9", [&] { return validate_ledger(cli); }},
  };

  bool all = true, matched = false;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && only != id) continue;
    matched = true;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << ": " << o.detail << std::endl;
  }
  if (!matched) {
    std::cerr << "unknown criterion " << only << "\n";
    return 2;
  }
  return all ? 0 : 1;
}
