#pragma once

// Alice/Bob linear-optics stage: information state, unequal-amplitude
// entangled channel, B1 mixing with three-class photon counting on both
// outputs, conditional phase shift and B2 mixing with an even or odd cat.
// Mode numbering follows the protocol: information 0, channel 1 (Alice) and
// 2 (Bob), B1 outputs 3/4, CPS output 5, cat 6, B2 outputs 7/8.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ecst/coherent.hpp"
#include "ecst/error.hpp"
#include "ecst/fock.hpp"

namespace ecst {

/// The cat qubit eps+|a> + eps-|-a>, with its cat-basis and Fock views.
struct InformationSpec {
  cplx alpha = 0.0;
  cplx eps_plus = 0.0;
  cplx eps_minus = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double x = 1.0;  // exp(-|alpha|^2)
  cplx a_plus = 0.0;
  cplx a_minus = 0.0;
  cplx p_i0 = 0.0;
  double prob_i0 = 0.0;

  double mean_photons() const { return std::norm(alpha); }

  /// sqrt(x) (eps+ + (-1)^n eps-) alpha^n / sqrt(n!), for n = 0..dim-1.
  std::vector<cplx> fock_coefficients(std::size_t dim) const {
    std::vector<cplx> p(dim);
    cplx power = std::sqrt(x);  // sqrt(x) alpha^n / sqrt(n!)
    for (std::size_t n = 0; n < dim; ++n) {
      if (n > 0) power *= alpha / std::sqrt(static_cast<double>(n));
      p[n] = power * (n % 2 == 0 ? eps_plus + eps_minus : eps_plus - eps_minus);
    }
    return p;
  }

  CoherentSuperposition as_superposition(const std::string& mode = "0") const {
    CoherentSuperposition s({mode});
    s.add(eps_plus, {alpha});
    s.add(eps_minus, {-alpha});
    return s;
  }

  /// Truncated Fock image eps+|a> + eps-|-a>, renormalised.
  FockState fock(const TruncationPolicy& policy, const std::string& mode = "0") const {
    const FockState plus = coherent_state(alpha, policy, mode);
    const FockState minus = coherent_state(-alpha, policy, mode);
    return plus.scaled(eps_plus).plus(minus, eps_minus).normalized();
  }
};

namespace detail {

inline void fill_derived(InformationSpec& info) {
  const double x2 = info.x * info.x;
  info.a_plus = std::sqrt((1.0 + x2) / 2.0) * (info.eps_plus + info.eps_minus);
  info.a_minus = std::sqrt((1.0 - x2) / 2.0) * (info.eps_plus - info.eps_minus);
  info.theta = 2.0 * std::atan2(std::abs(info.a_plus), std::abs(info.a_minus));
  info.phi = (std::abs(info.a_plus) > 0.0 && std::abs(info.a_minus) > 0.0)
                 ? std::arg(info.a_plus / info.a_minus)
                 : 0.0;
  info.p_i0 = std::sqrt(info.x) * (info.eps_plus + info.eps_minus);
  info.prob_i0 = std::norm(info.p_i0);
}

}  // namespace detail

/// Builds the information from (eps+, eps-), rescaling them so that
/// |eps+|^2 + |eps-|^2 + 2 x^2 Re(eps+* eps-) = 1.
inline InformationSpec make_information(cplx alpha, cplx eps_plus, cplx eps_minus) {
  InformationSpec info;
  info.alpha = alpha;
  info.x = std::exp(-std::norm(alpha));
  const double x2 = info.x * info.x;
  const double norm2 =
      std::norm(eps_plus) + std::norm(eps_minus) + 2.0 * x2 * std::real(std::conj(eps_plus) * eps_minus);
  if (!(norm2 > 1e-300) || !std::isfinite(norm2)) {
    throw Error(ErrorCode::non_normalizable, "information state has zero norm");
  }
  const double s = 1.0 / std::sqrt(norm2);
  info.eps_plus = eps_plus * s;
  info.eps_minus = eps_minus * s;
  detail::fill_derived(info);
  return info;
}

/// Builds the information from Bloch angles, A+/A- = e^{i phi} tan(theta/2),
/// by solving for (eps+, eps-). Needs alpha != 0 (the odd cat is undefined
/// at the origin).
inline InformationSpec make_information_bloch(cplx alpha, double theta, double phi) {
  if (std::abs(alpha) == 0.0) {
    throw Error(ErrorCode::singular_basis, "Bloch parametrisation needs alpha != 0 (cat basis is singular at x = 1)");
  }
  if (!std::isfinite(theta) || !std::isfinite(phi)) throw Error(ErrorCode::invalid_input, "non-finite Bloch angle");
  const double x = std::exp(-std::norm(alpha));
  const double x2 = x * x;
  const cplx a_plus = std::polar(std::sin(theta / 2.0), phi);
  const cplx a_minus = std::cos(theta / 2.0);
  const cplx sum = a_plus / std::sqrt((1.0 + x2) / 2.0);
  const cplx diff = a_minus / std::sqrt((1.0 - x2) / 2.0);
  InformationSpec info = make_information(alpha, (sum + diff) / 2.0, (sum - diff) / 2.0);
  // Keep the requested angles verbatim (atan2 would fold theta outside [0, pi]).
  info.theta = theta;
  info.phi = phi;
  return info;
}

/// (|a, a/sqrt2> - |-a, -a/sqrt2>) / sqrt(2(1 - x^3)) over modes 1, 2.
inline CoherentSuperposition build_channel(cplx alpha) {
  if (std::abs(alpha) == 0.0) throw Error(ErrorCode::degenerate_amplitude, "channel vanishes at alpha = 0");
  const cplx half = alpha / std::sqrt(2.0);
  CoherentSuperposition s({"1", "2"});
  s.add(1.0, {alpha, half});
  s.add(-1.0, {-alpha, -half});
  return s.normalized();
}

enum class CaseId { i, ii, iii, iv, v };
enum class Cps { identity, pi_shift };
enum class MixingCat { none, odd, even };
/// Which of the two B2 output families: (|I,0> - |0,I>) for cases ii/iii,
/// (|I,0> + |0,I>) for cases iv/v.
enum class Sign { minus, plus };

inline const char* to_string(CaseId c) {
  switch (c) {
    case CaseId::i: return "i";
    case CaseId::ii: return "ii";
    case CaseId::iii: return "iii";
    case CaseId::iv: return "iv";
    case CaseId::v: return "v";
  }
  return "?";
}
inline const char* to_string(Cps c) { return c == Cps::identity ? "I" : "P(pi)"; }
inline const char* to_string(MixingCat m) {
  switch (m) {
    case MixingCat::none: return "-";
    case MixingCat::odd: return "ODD";
    case MixingCat::even: return "EVEN";
  }
  return "?";
}
inline const char* to_string(Sign s) { return s == Sign::minus ? "-" : "+"; }

/// +1 for Sign::plus, -1 for Sign::minus.
inline double sign_value(Sign s) { return s == Sign::plus ? 1.0 : -1.0; }

struct CaseRule {
  CaseId id;
  PhotonClass class3;
  PhotonClass class4;
  Cps cps;
  MixingCat mixing;
};

inline constexpr std::array<CaseRule, 5> kCaseRules{{
    {CaseId::i, PhotonClass::zero, PhotonClass::zero, Cps::identity, MixingCat::none},
    {CaseId::ii, PhotonClass::nze, PhotonClass::zero, Cps::identity, MixingCat::odd},
    {CaseId::iii, PhotonClass::zero, PhotonClass::nze, Cps::pi_shift, MixingCat::odd},
    {CaseId::iv, PhotonClass::odd, PhotonClass::zero, Cps::identity, MixingCat::even},
    {CaseId::v, PhotonClass::zero, PhotonClass::odd, Cps::pi_shift, MixingCat::even},
}};

inline Sign sign_of(CaseId c) {
  if (c == CaseId::ii || c == CaseId::iii) return Sign::minus;
  if (c == CaseId::iv || c == CaseId::v) return Sign::plus;
  throw Error(ErrorCode::invalid_case, "case i has no B2 output");
}

/// Bob's mode-2 state after Alice's count, as listed in the outcome table
/// (unnormalised).
inline CoherentSuperposition expected_bob_state(const InformationSpec& info, CaseId c) {
  const cplx a = info.alpha / std::sqrt(2.0);
  const cplx ep = info.eps_plus;
  const cplx em = info.eps_minus;
  CoherentSuperposition s({"2"});
  switch (c) {
    case CaseId::i: s.add(1.0, {a}).add(-1.0, {-a}); break;
    case CaseId::ii: s.add(ep, {a}).add(-em, {-a}); break;
    case CaseId::iii: s.add(-ep, {-a}).add(em, {a}); break;
    case CaseId::iv: s.add(ep, {a}).add(em, {-a}); break;
    case CaseId::v: s.add(-ep, {-a}).add(-em, {a}); break;
  }
  return s;
}

/// One leaf of Alice's counting step.
struct BranchRecord {
  CaseId case_id = CaseId::i;
  PhotonClass class3 = PhotonClass::zero;
  PhotonClass class4 = PhotonClass::zero;
  double probability = 0.0;
  cplx alpha = 0.0;
  double tail_bound = 1e-12;
  CoherentSuperposition bob_mode2_expected;
  /// Simulated, normalised; empty when the branch has (numerically) zero
  /// probability.
  std::optional<FockState> bob_mode2_state;
  double bob_purity = 0.0;
  Cps cps = Cps::identity;
  MixingCat mixing_cat = MixingCat::none;
  std::optional<FockState> post_b2_state;
};

struct AliceStageResult {
  std::vector<BranchRecord> branches;  // cases i..v in order
  /// Largest probability among the four count patterns outside the table.
  double max_cross_probability = 0.0;
  double total_probability = 0.0;
  std::size_t b1_dim = 0;
  std::size_t bob_dim = 0;
};

/// Mixes information (mode 0) with the channel's mode 1 on B1, counts
/// {zero, nze, odd} on both outputs, and records Bob's conditional mode-2
/// state for each pattern in the table.
inline AliceStageResult alice_stage(const InformationSpec& info, const CoherentSuperposition& channel,
                                    double tail_bound = 1e-12) {
  if (channel.modes() != std::vector<std::string>{"1", "2"} || channel.num_terms() != 2) {
    throw Error(ErrorCode::mode_mismatch, "channel must be a two-term state over modes 1, 2");
  }
  const cplx ch_alpha = channel.terms()[0].labels[0];
  if (std::abs(std::abs(ch_alpha) - std::abs(info.alpha)) > 1e-12 * (1.0 + std::abs(info.alpha))) {
    throw Error(ErrorCode::invalid_input, "information and channel use different amplitudes");
  }
  const double mu = info.mean_photons();
  const auto b1_policy = TruncationPolicy::for_mean(2.0 * mu, tail_bound);
  const auto bob_policy = TruncationPolicy::for_mean(mu / 2.0, tail_bound);

  // B1 acts on modes 0, 1 only. The channel's two terms are carried by an
  // auxiliary two-level index t in place of mode 2, and each term's mode-2
  // coherent vector is attached after the splitter.
  const std::size_t d = b1_policy.dim;
  const std::size_t d2 = bob_policy.dim;
  const FockState info_fock = info.fock(b1_policy, "0");
  std::vector<cplx> pre(d * d * 2, 0.0);
  std::vector<std::vector<cplx>> mode2;
  double residual = info_fock.truncation_residual();
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& term = channel.terms()[t];
    const FockState m1 = to_fock(single_mode("1", {{1.0, term.labels[0]}}), {d}, tail_bound);
    const FockState m2 = to_fock(single_mode("2", {{1.0, term.labels[1]}}), {d2}, tail_bound);
    residual = std::max({residual, m1.truncation_residual(), m2.truncation_residual()});
    for (std::size_t n0 = 0; n0 < d; ++n0) {
      for (std::size_t n1 = 0; n1 < d; ++n1) pre[(n0 * d + n1) * 2 + t] = term.coeff * info_fock.amps()[n0] * m1.amps()[n1];
    }
    mode2.push_back(m2.amps());
  }
  const FockState split = beamsplitter(FockState({"0", "1", "t"}, {d, d, 2}, std::move(pre), residual), "0", "1", "3", "4");

  // Bob's unnormalised mode-2 vector for each count pair (n3, n4).
  std::vector<cplx> bob(d * d * d2, 0.0);
  std::vector<double> weight(d * d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < d * d; ++i) {
    const cplx c0 = split.amps()[2 * i];
    const cplx c1 = split.amps()[2 * i + 1];
    double w = 0.0;
    for (std::size_t k = 0; k < d2; ++k) {
      const cplx v = c0 * mode2[0][k] + c1 * mode2[1][k];
      bob[i * d2 + k] = v;
      w += std::norm(v);
    }
    weight[i] = w;
    total += w;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::zero_norm, "post-B1 state vanishes");

  AliceStageResult result;
  result.b1_dim = d;
  result.bob_dim = d2;

  std::array<std::array<double, 3>, 3> prob{};
  for (std::size_t n3 = 0; n3 < d; ++n3) {
    for (std::size_t n4 = 0; n4 < d; ++n4) {
      const auto i = static_cast<std::size_t>(n3 == 0 ? PhotonClass::zero : n3 % 2 ? PhotonClass::odd : PhotonClass::nze);
      const auto j = static_cast<std::size_t>(n4 == 0 ? PhotonClass::zero : n4 % 2 ? PhotonClass::odd : PhotonClass::nze);
      prob[i][j] += weight[n3 * d + n4] / total;
    }
  }
  auto idx = [](PhotonClass c) { return static_cast<std::size_t>(c); };
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      result.total_probability += prob[i][j];
      const bool listed = std::any_of(kCaseRules.begin(), kCaseRules.end(), [&](const CaseRule& r) {
        return idx(r.class3) == i && idx(r.class4) == j;
      });
      if (!listed) result.max_cross_probability = std::max(result.max_cross_probability, prob[i][j]);
    }
  }

  for (const auto& rule : kCaseRules) {
    BranchRecord rec;
    rec.case_id = rule.id;
    rec.class3 = rule.class3;
    rec.class4 = rule.class4;
    rec.cps = rule.cps;
    rec.mixing_cat = rule.mixing;
    rec.alpha = info.alpha;
    rec.tail_bound = tail_bound;
    rec.probability = prob[idx(rule.class3)][idx(rule.class4)];
    rec.bob_mode2_expected = expected_bob_state(info, rule.id);
    if (rec.probability >= kMinRenormProbability) {
      // Principal vector of Bob's conditional state and its purity.
      std::vector<std::size_t> members;
      for (std::size_t n3 = 0; n3 < d; ++n3) {
        if (!in_class(n3, rule.class3)) continue;
        for (std::size_t n4 = 0; n4 < d; ++n4) {
          if (in_class(n4, rule.class4)) members.push_back(n3 * d + n4);
        }
      }
      const std::size_t best = *std::max_element(members.begin(), members.end(),
                                                 [&](std::size_t a, std::size_t b) { return weight[a] < weight[b]; });
      FockState b({"2"}, {d2}, std::vector<cplx>(bob.begin() + best * d2, bob.begin() + (best + 1) * d2), residual);
      b = b.normalized();
      double captured = 0.0;
      double branch_total = 0.0;
      for (std::size_t m : members) {
        cplx ov = 0.0;
        for (std::size_t k = 0; k < d2; ++k) ov += std::conj(b.amps()[k]) * bob[m * d2 + k];
        captured += std::norm(ov);
        branch_total += weight[m];
      }
      rec.bob_mode2_state = std::move(b);
      rec.bob_purity = captured / branch_total;
    }
    result.branches.push_back(std::move(rec));
  }
  return result;
}

/// Fock cutoff for modes carrying amplitude alpha (B2 outputs and beyond).
inline TruncationPolicy bob_output_policy(cplx alpha, double tail_bound) {
  return TruncationPolicy::for_mean(std::norm(alpha), tail_bound);
}

/// Conditional phase shift, mixing cat and B2 for one branch; returns the
/// normalised state over modes 7, 8.
inline FockState bob_stage(const BranchRecord& branch) {
  if (branch.case_id == CaseId::i) throw Error(ErrorCode::invalid_case, "case i is not recoverable");
  if (!branch.bob_mode2_state) throw Error(ErrorCode::zero_norm, "branch has zero probability");
  const auto policy = bob_output_policy(branch.alpha, branch.tail_bound);
  FockState mode5 = *branch.bob_mode2_state;
  if (branch.cps == Cps::pi_shift) {
    mode5 = mode5.with_level_factor("2", [](std::size_t n) { return n % 2 == 0 ? cplx(1.0) : cplx(-1.0); });
  }
  mode5 = mode5.relabeled("2", "5").resized("5", policy.dim);
  const Parity parity = branch.mixing_cat == MixingCat::odd ? Parity::odd : Parity::even;
  const FockState cat = cat_state(branch.alpha / std::sqrt(2.0), parity, policy, "6");
  return beamsplitter(tensor({mode5, cat}), "5", "6", "7", "8").normalized();
}

/// Normalised (|I,0> -/+ |0,I>) over modes 7, 8.
inline FockState information_vacuum_target(const InformationSpec& info, Sign sign, const TruncationPolicy& policy) {
  const FockState i7 = info.fock(policy, "7");
  const FockState i8 = info.fock(policy, "8");
  const FockState v7 = FockState::number_state("7", policy.dim, 0);
  const FockState v8 = FockState::number_state("8", policy.dim, 0);
  return tensor({i7, v8}).plus(tensor({v7, i8}), sign_value(sign)).normalized();
}

struct CaseIFidelity {
  double simulated = 0.0;    // |<I|ODD, alpha/sqrt2>|^2 by Fock inner product
  double closed_form = 0.0;  // x^{3/2 - sqrt2} (1 - x^sqrt2)^2 |eps+ - eps-|^2 / (2(1 - x))
};

inline CaseIFidelity case_i_fidelity(const InformationSpec& info, double tail_bound = 1e-12) {
  const auto policy = bob_output_policy(info.alpha, tail_bound);
  CaseIFidelity f;
  f.simulated = mode_fidelity(cat_state(info.alpha / std::sqrt(2.0), Parity::odd, policy, "2"), info.fock(policy, "0"));
  const double x = info.x;
  const double r2 = std::sqrt(2.0);
  f.closed_form = std::pow(x, 1.5 - r2) * std::pow(1.0 - std::pow(x, r2), 2) *
                  std::norm(info.eps_plus - info.eps_minus) / (2.0 * (1.0 - x));
  return f;
}

}  // namespace ecst
