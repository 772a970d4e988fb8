#pragma once

// Two-cavity recovery: mode 8 meets a ground-state atom in cavity C (and
// becomes mode 9), the atom is measured, and on |u> mode 9 meets an excited
// atom in C' (becoming mode 10). Atoms are dim-2 modes with level 0 = |l>.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ecst/error.hpp"
#include "ecst/fock.hpp"
#include "ecst/protocol.hpp"

namespace ecst {

/// Resonant coupling g and interaction time t0 with g |alpha| t0 = pi/2.
struct JcParams {
  double g = 1.0;
  double t0 = 0.0;

  static JcParams for_alpha(cplx alpha, double g = 1.0) {
    if (std::abs(alpha) == 0.0) throw Error(ErrorCode::degenerate_amplitude, "t0 undefined at alpha = 0");
    if (!(g > 0.0)) throw Error(ErrorCode::invalid_input, "coupling must be positive");
    return {g, kPi / (2.0 * g * std::abs(alpha))};
  }

  /// Rabi angle g sqrt(n) t0 of the (n, l) <-> (n-1, u) block.
  double phi(std::size_t n) const { return g * std::sqrt(static_cast<double>(n)) * t0; }
};

/// Evolves field mode ⊗ atom for t0 under a†σ- + aσ+: each pair
/// (|n,l>, |n-1,u>) rotates by phi_n. |d-1, u> couples to the level d just
/// outside the cutoff; more weight there than the tail bound is an error.
inline FockState jc_evolve(const FockState& state, const std::string& field, const std::string& atom,
                           const JcParams& params, double tail_bound = 1e-12) {
  const std::size_t mf = state.mode_index(field);
  const std::size_t ma = state.mode_index(atom);
  if (state.dims()[ma] != 2) throw Error(ErrorCode::dimension_mismatch, "atom mode must have dimension 2");
  const std::size_t d = state.dims()[mf];
  const std::size_t sf = state.stride(mf);
  const std::size_t sa = state.stride(ma);
  const auto bases = state.base_offsets(mf, ma);
  const auto& in = state.amps();

  double leak = 0.0;
  for (std::size_t b : bases) leak += std::norm(in[b + (d - 1) * sf + sa]);
  if (leak > tail_bound * state.norm_sq()) {
    throw Error(ErrorCode::cutoff_leak, "excited-atom weight on the top Fock level exceeds the tail bound");
  }

  std::vector<cplx> out(in.size(), 0.0);
  const cplx minus_i(0.0, -1.0);
  for (std::size_t b : bases) {
    out[b] = in[b];  // |0, l> is stationary
    for (std::size_t n = 1; n <= d; ++n) {
      const double c = std::cos(params.phi(n));
      const double s = std::sin(params.phi(n));
      const cplx nl = n < d ? in[b + n * sf] : cplx(0.0);
      const cplx mu = in[b + (n - 1) * sf + sa];
      if (n < d) out[b + n * sf] = c * nl + minus_i * s * mu;
      out[b + (n - 1) * sf + sa] = c * mu + minus_i * s * nl;
    }
  }
  return FockState(state.labels(), state.dims(), std::move(out), state.truncation_residual());
}

/// Convenience: attach an atom in `initial` to a field state and evolve.
inline FockState jc_evolve(const FockState& field_state, const std::string& field, const AtomState& initial,
                           const std::string& atom, const JcParams& params, double tail_bound = 1e-12) {
  return jc_evolve(tensor({field_state, initial.as_mode(atom)}), field, atom, params, tail_bound);
}

enum class Situation { A, B, C_l, C_u };

inline const char* to_string(Situation s) {
  switch (s) {
    case Situation::A: return "A";
    case Situation::B: return "B";
    case Situation::C_l: return "C_l";
    case Situation::C_u: return "C_u";
  }
  return "?";
}

struct CavityOutcome {
  Situation situation = Situation::A;
  std::size_t photons = 0;  // photon count of mode 9 for situation B
  /// Conditional on the table branch that fed the cavity.
  double probability = 0.0;
  /// Mode 7 (A, B) or mode 10 (C_l, C_u), normalised; empty for
  /// numerically impossible outcomes.
  std::optional<FockState> teleported_state;
  double fidelity = 0.0;
};

struct CavityCResult {
  CavityOutcome a;
  std::vector<CavityOutcome> b;  // one per n >= 1 with non-zero weight
  double prob_l = 0.0;
  double prob_u = 0.0;
  double prob_b_total = 0.0;
  /// P(mode 7 non-vacuum | atom u); the mode-7 vacuum check.
  double mode7_excited_given_u = 0.0;
  /// Unnormalised mode-9 state after atom u and mode-7 vacuum; norm^2 is
  /// the branch-conditional probability of |u>.
  std::optional<FockState> mode9_given_u;
};

namespace detail {

inline CavityOutcome make_outcome(Situation s, std::size_t n, const FockState& unnormalised, const FockState& info) {
  CavityOutcome o;
  o.situation = s;
  o.photons = n;
  o.probability = unnormalised.norm_sq();
  if (o.probability >= kMinRenormProbability) {
    o.teleported_state = unnormalised.normalized();
    o.fidelity = mode_fidelity(*o.teleported_state, info);
  }
  return o;
}

}  // namespace detail

/// Cavity C on mode 8 of a normalised modes-7/8 state, atom VNM, photon
/// count on mode 9 (atom l) or mode 7 (atom u). `info` is the reference
/// for fidelities.
inline CavityCResult stage_cavity_C(const FockState& post_b2, const JcParams& params, const FockState& info,
                                    double tail_bound = 1e-12) {
  if (post_b2.labels() != std::vector<std::string>{"7", "8"}) {
    throw Error(ErrorCode::mode_mismatch, "cavity C expects a state over modes 7, 8");
  }
  const FockState evolved = jc_evolve(post_b2, "8", AtomState::ground(), "C", params, tail_bound).relabeled("8", "9");
  const double total = evolved.norm_sq();
  const FockState given_l = evolved.slice("C", 0).scaled(1.0 / std::sqrt(total));
  const FockState given_u = evolved.slice("C", 1).scaled(1.0 / std::sqrt(total));

  CavityCResult r;
  r.prob_l = given_l.norm_sq();
  r.prob_u = given_u.norm_sq();

  r.a = detail::make_outcome(Situation::A, 0, given_l.slice("9", 0), info);
  for (std::size_t n = 1; n < given_l.dim("9"); ++n) {
    auto o = detail::make_outcome(Situation::B, n, given_l.slice("9", n), info);
    r.prob_b_total += o.probability;
    if (o.probability > 0.0) r.b.push_back(std::move(o));
  }

  const FockState mode9 = given_u.slice("7", 0);
  r.mode7_excited_given_u = r.prob_u > 0.0 ? std::max(0.0, (r.prob_u - mode9.norm_sq()) / r.prob_u) : 0.0;
  if (r.prob_u >= kMinRenormProbability) r.mode9_given_u = mode9;
  return r;
}

struct CavityCprimeResult {
  CavityOutcome c_l;
  CavityOutcome c_u;
};

/// Cavity C' with the atom prepared in |u>; `mode9` is unnormalised and its
/// weight carries through to the outcome probabilities.
inline CavityCprimeResult stage_cavity_Cprime(const FockState& mode9, const JcParams& params, const FockState& info,
                                              double tail_bound = 1e-12) {
  if (mode9.labels() != std::vector<std::string>{"9"}) {
    throw Error(ErrorCode::mode_mismatch, "cavity C' expects a single-mode state over mode 9");
  }
  const FockState evolved =
      jc_evolve(mode9, "9", AtomState::excited(), "C'", params, tail_bound).relabeled("9", "10");
  CavityCprimeResult r;
  r.c_l = detail::make_outcome(Situation::C_l, 0, evolved.slice("C'", 0), info);
  r.c_u = detail::make_outcome(Situation::C_u, 0, evolved.slice("C'", 1), info);
  return r;
}

}  // namespace ecst
