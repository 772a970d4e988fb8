#pragma once

// Closed-form probabilities, fidelities and asymptotic expansions of the
// teleportation scheme as pure scalar functions. Some reference forms are
// known to disagree with the simulator; those sit next to a rederived form
// and the validation harness adjudicates both.

#include <cmath>
#include <complex>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ecst/cavity.hpp"
#include "ecst/error.hpp"
#include "ecst/fock.hpp"
#include "ecst/protocol.hpp"

namespace ecst::formulas {

inline constexpr double kPi2 = kPi * kPi;
inline constexpr double kPi4 = kPi2 * kPi2;

// ---------------------------------------------------------------------------
// Overlaps, channel, information

/// |<a|b>|^2 = exp(-|a - b|^2).
inline double coherent_overlap_sq(cplx a, cplx b) { return std::exp(-std::norm(a - b)); }

/// Channel concurrence (1 + x) sqrt(1 + x^2) / (1 + x + x^2).
inline double channel_concurrence(double x) { return (1.0 + x) * std::sqrt(1.0 + x * x) / (1.0 + x + x * x); }

/// Fock coefficient with n! in the denominator instead of sqrt(n!).
inline cplx fock_coefficient_factorial(const InformationSpec& info, std::size_t n) {
  const cplx sign_sum = n % 2 == 0 ? info.eps_plus + info.eps_minus : info.eps_plus - info.eps_minus;
  return std::sqrt(info.x) * sign_sum * std::pow(info.alpha, static_cast<double>(n)) /
         std::exp(std::lgamma(static_cast<double>(n) + 1.0));
}

/// Normalisation with a single x on the cross term.
inline double normalisation_single_x(const InformationSpec& info) {
  return std::norm(info.eps_plus) + std::norm(info.eps_minus) +
         info.x * 2.0 * std::real(std::conj(info.eps_plus) * info.eps_minus);
}

/// Normalisation with the true overlap <a|-a> = x^2.
inline double normalisation(const InformationSpec& info) {
  return std::norm(info.eps_plus) + std::norm(info.eps_minus) +
         info.x * info.x * 2.0 * std::real(std::conj(info.eps_plus) * info.eps_minus);
}

/// Odd-cat coefficient with (eps+ + eps-) in place of (eps+ - eps-).
inline cplx a_minus_sum_form(const InformationSpec& info) {
  return std::sqrt((1.0 - info.x * info.x) / 2.0) * (info.eps_plus + info.eps_minus);
}

// ---------------------------------------------------------------------------
// Alice's counting branches

inline double prob_case_i(double x, double p0) { return x * p0 / (1.0 + x + x * x); }

/// Cases ii and iii (each), the "P+" of the outcome table.
inline double prob_nze_branch(double x, double p0) {
  return (1.0 + x) * (1.0 + x) * (1.0 - p0) / (4.0 * (1.0 + x + x * x));
}

/// Cases iv and v (each), the "P-" of the outcome table.
inline double prob_odd_branch(double x, double p0) {
  return (1.0 + x * x) * (1.0 + p0) / (4.0 * (1.0 + x + x * x));
}

inline double branch_probability(CaseId c, double x, double p0) {
  switch (c) {
    case CaseId::i: return prob_case_i(x, p0);
    case CaseId::ii:
    case CaseId::iii: return prob_nze_branch(x, p0);
    case CaseId::iv:
    case CaseId::v: return prob_odd_branch(x, p0);
  }
  return 0.0;
}

inline double fidelity_case_i(const InformationSpec& info) {
  const double x = info.x;
  const double r2 = std::sqrt(2.0);
  return std::pow(x, 1.5 - r2) * std::pow(1.0 - std::pow(x, r2), 2) * std::norm(info.eps_plus - info.eps_minus) /
         (2.0 * (1.0 - x));
}

// ---------------------------------------------------------------------------
// Sums over the information's photon distribution

struct AvgFidelityTerms {
  double s1 = 0.0;  // sum_{n>=1} P_n cos^2 phi_n
  double s2 = 0.0;  // sum_{n>=1} P_n sin^2 phi_n
  cplx s3 = 0.0;    // sum_{n>=1} p*_{n-1} p_n sin phi_n cos phi_n
  double sum_sin4 = 0.0;
  double sum_sin2cos2 = 0.0;
  double sum_sin2cos2_phi = 0.0;  // with a stray phi_n factor
  double big_x = 0.0;             // 2x^2(|eps+ + eps-|^2 - 1)/(1 - x^2)
  double k1 = 0.0;                // |eps+|^2 - |eps-|^2
  cplx k2 = 0.0;                  // x^2(eps+* eps- - eps+ eps-*)
  double p0 = 0.0;
  double x = 0.0;
  double tail = 0.0;  // Poisson weight beyond the summation cutoff
};

inline double big_x(const InformationSpec& info) {
  const double x2 = info.x * info.x;
  return 2.0 * x2 * (std::norm(info.eps_plus + info.eps_minus) - 1.0) / (1.0 - x2);
}

/// Direct summation to the truncation cutoff of |alpha|^2.
inline AvgFidelityTerms exact_sums(const InformationSpec& info, const JcParams& params, double tail_bound = 1e-12) {
  const auto policy = TruncationPolicy::for_mean(info.mean_photons(), tail_bound);
  const auto p = info.fock_coefficients(policy.dim);
  AvgFidelityTerms t;
  for (std::size_t n = 1; n < p.size(); ++n) {
    const double ph = params.phi(n);
    const double c = std::cos(ph);
    const double s = std::sin(ph);
    const double pn = std::norm(p[n]);
    t.s1 += pn * c * c;
    t.s2 += pn * s * s;
    t.s3 += std::conj(p[n - 1]) * p[n] * s * c;
    t.sum_sin4 += pn * s * s * s * s;
    t.sum_sin2cos2 += pn * s * s * c * c;
    t.sum_sin2cos2_phi += pn * s * s * c * c * ph;
  }
  t.p0 = std::norm(p[0]);
  t.x = info.x;
  t.big_x = big_x(info);
  t.k1 = std::norm(info.eps_plus) - std::norm(info.eps_minus);
  t.k2 = info.x * info.x *
         (std::conj(info.eps_plus) * info.eps_minus - info.eps_plus * std::conj(info.eps_minus));
  t.tail = poisson_tail(info.mean_photons(), policy.dim);
  return t;
}

// ---------------------------------------------------------------------------
// Cavity C and C' (conditional on the table branch; Sign::minus is cases
// ii/iii, Sign::plus is iv/v)

/// Atom found in |l>; additive terms inside the bracket, sum from n = 0.
inline double prob_atom_ground(Sign sign, double p0, double s1) {
  const double sg = sign_value(sign);
  return (p0 + s1 + 1.0 + sg * 2.0 * p0) / (2.0 * (1.0 + sg * p0));
}

/// Same, with "+ 1 -/+ 2 P0" outside the bracket.
inline double prob_atom_ground_outer_terms(Sign sign, double p0, double s1) {
  const double sg = sign_value(sign);
  return (p0 + s1) / (2.0 * (1.0 + sg * p0)) + 1.0 + sg * 2.0 * p0;
}

inline double prob_atom_excited(Sign sign, double p0, double s2) {
  return s2 / (2.0 * (1.0 + sign_value(sign) * p0));
}

inline double prob_situation_a(Sign sign, double p0) {
  return sign == Sign::minus ? 0.5 : (1.0 + 3.0 * p0) / (2.0 * (1.0 + p0));
}

inline double fidelity_situation_a(Sign sign, double p0) {
  return sign == Sign::minus ? 1.0 - p0 : (1.0 + 2.0 * p0 + p0 * p0) / (1.0 + 3.0 * p0);
}

inline double fidelity_situation_b(double p0) { return p0; }

/// Summed over n >= 1.
inline double prob_situation_b(Sign sign, double p0, double s1) {
  return s1 / (2.0 * (1.0 + sign_value(sign) * p0));
}

inline double prob_situation_cl(Sign sign, double p0, double sum_sin4) {
  return sum_sin4 / (2.0 * (1.0 + sign_value(sign) * p0));
}

inline double fidelity_situation_cl(double s2, double sum_sin4) { return s2 * s2 / sum_sin4; }

inline double prob_situation_cu(Sign sign, double p0, double sum_sin2cos2) {
  return sum_sin2cos2 / (2.0 * (1.0 + sign_value(sign) * p0));
}

inline double fidelity_situation_cu(cplx s3, double sum_sin2cos2) { return std::norm(s3) / sum_sin2cos2; }

/// Denominator carrying the stray phi_n factor.
inline double fidelity_situation_cu_phi_weighted(cplx s3, double sum_sin2cos2_phi) {
  return std::norm(s3) / sum_sin2cos2_phi;
}

// ---------------------------------------------------------------------------
// Average fidelity

/// Probability-weighted sum with each situation weighted by the probability
/// of the branch family that actually produces it. `swapped_weights`
/// exchanges the two families' weights.
inline double avg_fidelity_from_parts(const InformationSpec& info, const AvgFidelityTerms& t,
                                      bool swapped_weights = false) {
  const double x = t.x;
  const double p0 = t.p0;
  double f = prob_case_i(x, p0) * fidelity_case_i(info);
  for (Sign sign : {Sign::minus, Sign::plus}) {
    const double inner = prob_situation_a(sign, p0) * fidelity_situation_a(sign, p0) +
                         prob_situation_b(sign, p0, t.s1) * fidelity_situation_b(p0) +
                         prob_situation_cl(sign, p0, t.sum_sin4) * fidelity_situation_cl(t.s2, t.sum_sin4) +
                         prob_situation_cu(sign, p0, t.sum_sin2cos2) * fidelity_situation_cu(t.s3, t.sum_sin2cos2);
    const bool nze_family = (sign == Sign::minus) != swapped_weights;
    const double weight = nze_family ? prob_nze_branch(x, p0) : prob_odd_branch(x, p0);
    f += 2.0 * weight * inner;
  }
  return f;
}

/// Simplified average fidelity with exponent 2 - 3/2 - sqrt2
/// and case-i/vacuum bracket.
inline double avg_fidelity_simplified(const InformationSpec& info, const AvgFidelityTerms& t) {
  const double x = t.x;
  const double p0 = t.p0;
  const double r2 = std::sqrt(2.0);
  const double eps_sq_diff = std::norm(info.eps_plus * info.eps_plus - info.eps_minus * info.eps_minus);
  const double head = (std::pow(x, 2.0 - 1.5 - r2) * std::pow(1.0 - std::pow(x, r2), 2) * eps_sq_diff -
                       x * (1.0 - x) * p0) /
                      (2.0 * (1.0 - x * x * x));
  return head + 0.5 * (1.0 + p0 * p0 + p0 * t.s1 + t.s2 * t.s2 + std::norm(t.s3));
}

/// The same simplification redone: exponent 2 + 3/2 - sqrt2 and twice the
/// x(1-x)P0 term. Equals `avg_fidelity_from_parts` identically.
inline double avg_fidelity_simplified_rederived(const InformationSpec& info, const AvgFidelityTerms& t) {
  const double x = t.x;
  const double p0 = t.p0;
  const double r2 = std::sqrt(2.0);
  const double eps_sq_diff = std::norm(info.eps_plus * info.eps_plus - info.eps_minus * info.eps_minus);
  const double head = (std::pow(x, 2.0 + 1.5 - r2) * std::pow(1.0 - std::pow(x, r2), 2) * eps_sq_diff -
                       2.0 * x * (1.0 - x) * p0) /
                      (2.0 * (1.0 - x * x * x));
  return head + 0.5 * (1.0 + p0 * p0 + p0 * t.s1 + t.s2 * t.s2 + std::norm(t.s3));
}

/// Large-|alpha| expansion carrying the x, X, k1, k2 corrections, transcribed
/// term by term. NaN at alpha = 0 where 1/(1 - x^2) is singular.
inline double avg_fidelity_expansion(const InformationSpec& info) {
  const double mu = info.mean_photons();
  if (!(mu > 0.0)) return std::nan("");
  const double x = info.x;
  const double x2 = x * x;
  const double p0 = info.prob_i0;
  const double bx = big_x(info);
  const double k1 = std::norm(info.eps_plus) - std::norm(info.eps_minus);
  const cplx k2 = x2 * (std::conj(info.eps_plus) * info.eps_minus - info.eps_plus * std::conj(info.eps_minus));
  const double r2 = std::sqrt(2.0);
  const double mu2 = mu * mu;
  const double eps_sq_diff = std::norm(info.eps_plus * info.eps_plus - info.eps_minus * info.eps_minus);

  const double head = (std::pow(x, 2.0 - 1.5 - r2) * std::pow(1.0 - std::pow(x, r2), 2) * eps_sq_diff -
                       x * (1.0 - x) * p0) /
                      (2.0 * (1.0 - x * x2));
  const double brace = p0 * p0 +
                       p0 * kPi2 / 32.0 * (2.0 / mu - 1.0 / mu2 + (8.0 - 5.0 / mu + 1.0 / mu2) * bx) - p0 -
                       kPi2 / (8.0 * mu) + kPi2 * (kPi2 + 8.0) / (128.0 * mu2) -
                       kPi2 / 2.0 * (1.0 - (10.0 + kPi2) / (16.0 * mu) - (16.0 + 9.0 * kPi2) / (16.0 * mu2)) * bx +
                       kPi2 * (2.0 - 1.0 / (4.0 * mu) + 41.0 / (32.0 * mu2)) * bx * bx;
  const double k1_term = x2 * kPi2 * k1 * k1 / (256.0 * mu2);
  const double k2_term = x2 * kPi2 * std::norm(k2) / (144.0 * mu) *
                         ((kPi2 + 3.0) * (kPi2 + 3.0) - 2.0 * (kPi4 + 10.0 * kPi2 + 21.0) / mu +
                          (kPi4 + 9.0 * kPi2 + 18.0) / (4.0 * mu2));
  const double mixed = x2 * kPi2 * 2.0 * std::real(k1 * k2) / (192.0 * mu) *
                       ((kPi2 + 3.0) - (kPi4 + 15.0 * kPi2 + 60.0) / (6.0 * mu));
  return 1.0 + head + 0.5 * brace + k1_term - k2_term + mixed;
}

/// 1 - pi^2/(16|a|^2) + pi^2(pi^2 + 8)/(256|a|^4).
inline double avg_fidelity_asymptotic(double mean_photons) {
  const double mu = mean_photons;
  return 1.0 - kPi2 / (16.0 * mu) + kPi2 * (kPi2 + 8.0) / (256.0 * mu * mu);
}

/// Two-term expansion of the same sums carried one order further (y^4
/// moments of the photon distribution, coherent-like information):
/// 1 - pi^2/(16 mu) + (3 pi^4 - 13 pi^2)/(512 mu^2).
inline double avg_fidelity_asymptotic_rederived(double mean_photons) {
  const double mu = mean_photons;
  return 1.0 - kPi2 / (16.0 * mu) + (3.0 * kPi4 - 13.0 * kPi2) / (512.0 * mu * mu);
}

// ---------------------------------------------------------------------------
// Large-|alpha| expansions of the sums and moments

struct ApproxSums {
  double s1 = 0.0;
  double s2 = 0.0;
  cplx s3 = 0.0;
  bool below_expansion_regime = false;  // |alpha|^2 < 5
};

inline double s1_bracket(double mu, double bx) {
  const double mu2 = mu * mu;
  return kPi2 / 32.0 * (2.0 / mu - 1.0 / mu2 + (8.0 - 5.0 / mu + 1.0 / mu2) * bx);
}

/// S1 = bracket - P0, S2 = 1 - (bracket + P0), S3 from the k1/k2 expansion.
inline ApproxSums approx_sums(const InformationSpec& info) {
  const double mu = info.mean_photons();
  if (!(mu > 0.0)) throw Error(ErrorCode::degenerate_amplitude, "expansion needs alpha != 0");
  const double bx = big_x(info);
  const double p0 = info.prob_i0;
  const double t1 = s1_bracket(mu, bx);
  ApproxSums a;
  a.below_expansion_regime = mu < 5.0;
  a.s1 = t1 - p0;
  a.s2 = 1.0 - (t1 + p0);
  const double k1 = std::norm(info.eps_plus) - std::norm(info.eps_minus);
  const cplx k2_raw = std::conj(info.eps_plus) * info.eps_minus - info.eps_plus * std::conj(info.eps_minus);
  const double x2 = info.x * info.x;
  const cplx phase = info.alpha / std::abs(info.alpha);
  a.s3 = phase * (kPi * k1 / (16.0 * mu) * (-1.0 + (kPi2 + 6.0) / (6.0 * mu)) -
                  kPi * x2 * k2_raw / 12.0 *
                      (kPi2 + 3.0 - 3.0 * (kPi2 + 7.0) / (4.0 * mu) + (kPi2 + 6.0) / (8.0 * mu * mu)));
  return a;
}

/// <I| a†^m a^m |I> by summation over the Fock distribution.
inline double factorial_moment(const InformationSpec& info, unsigned m, double tail_bound = 1e-14) {
  const auto policy = TruncationPolicy::for_mean(info.mean_photons(), tail_bound);
  const auto p = info.fock_coefficients(policy.dim + m);
  double s = 0.0;
  for (std::size_t n = m; n < p.size(); ++n) {
    double falling = 1.0;
    for (unsigned j = 0; j < m; ++j) falling *= static_cast<double>(n - j);
    s += falling * std::norm(p[n]);
  }
  return s;
}

/// Closed form of the factorial moment: |a|^{2m} for even m,
/// |a|^{2m}(1 - X) for odd m.
inline double factorial_moment_closed(const InformationSpec& info, unsigned m) {
  const double base = std::pow(info.mean_photons(), static_cast<double>(m));
  return m % 2 == 0 ? base : base * (1.0 - big_x(info));
}

/// Reference pattern with odd orders a†^{2k+1} a^{2k+1} -> |a|^{4k}(1 - X).
inline double factorial_moment_reference(const InformationSpec& info, unsigned m) {
  if (m % 2 == 0) return std::pow(info.mean_photons(), static_cast<double>(m));
  return std::pow(info.mean_photons(), static_cast<double>(m - 1)) * (1.0 - big_x(info));
}

/// sum_n y^k P_n with y = (n - |a|^2)/|a|^2, by summation.
inline double y_moment(const InformationSpec& info, unsigned k, double tail_bound = 1e-14) {
  const double mu = info.mean_photons();
  const auto policy = TruncationPolicy::for_mean(mu, tail_bound);
  const auto p = info.fock_coefficients(policy.dim);
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) s += std::pow((static_cast<double>(n) - mu) / mu, k) * std::norm(p[n]);
  return s;
}

/// Closed forms for k = 1, 2, 3 derived from the factorial moments.
inline double y_moment_closed(const InformationSpec& info, unsigned k) {
  const double mu = info.mean_photons();
  const double bx = big_x(info);
  switch (k) {
    case 1: return -bx;
    case 2: return 1.0 / mu + (2.0 - 1.0 / mu) * bx;
    case 3: return 1.0 / (mu * mu) + (-4.0 + 3.0 / mu - 1.0 / (mu * mu)) * bx;
    default: throw Error(ErrorCode::invalid_input, "closed y-moments exist for k = 1, 2, 3");
  }
}

/// Reference forms: +X for k = 1, and + on the last k = 3 term.
inline double y_moment_reference(const InformationSpec& info, unsigned k) {
  const double mu = info.mean_photons();
  const double bx = big_x(info);
  switch (k) {
    case 1: return bx;
    case 2: return 1.0 / mu + (2.0 - 1.0 / mu) * bx;
    case 3: return 1.0 / (mu * mu) + (-4.0 + 3.0 / mu + 1.0 / (mu * mu)) * bx;
    default: throw Error(ErrorCode::invalid_input, "closed y-moments exist for k = 1, 2, 3");
  }
}

// ---------------------------------------------------------------------------
// Outcome tree

struct OutcomeLeaf {
  CaseId case_id = CaseId::i;
  std::optional<Situation> situation;  // empty for case i
  std::size_t photons = 0;
  double probability = 0.0;  // joint: branch x situation
  double fidelity = 0.0;
};

inline constexpr double kTreeCompletenessTol = 1e-9;

/// Sum of probability x fidelity over every leaf.
inline double avg_fidelity_exact(std::span<const OutcomeLeaf> leaves) {
  double total = 0.0;
  double f = 0.0;
  for (const auto& l : leaves) {
    total += l.probability;
    f += l.probability * l.fidelity;
  }
  if (std::abs(total - 1.0) > kTreeCompletenessTol) {
    throw Error(ErrorCode::incomplete_tree, "leaf probabilities sum to " + std::to_string(total));
  }
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace ecst::formulas
