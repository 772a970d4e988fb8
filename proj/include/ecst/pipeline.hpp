#pragma once

// Full protocol at one (alpha, information) point: Alice's counting, Bob's
// CPS and cat mixing, both cavities, and the outcome tree with joint
// probabilities.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "ecst/cavity.hpp"
#include "ecst/coherent.hpp"
#include "ecst/formulas.hpp"
#include "ecst/protocol.hpp"

namespace ecst {

struct BranchEvaluation {
  CaseId case_id = CaseId::i;
  double probability = 0.0;
  /// Fidelity of Bob's simulated mode-2 state with the tabulated one.
  double bob_state_fidelity = 0.0;
  double bob_purity = 0.0;
  /// Fidelity of the modes-7/8 state with (|I,0> -/+ |0,I>).
  double post_b2_fidelity = 0.0;
  /// <psi| SWAP_78 |psi>; -1 for the minus family, +1 for the plus family.
  double exchange_parity = 0.0;
  std::optional<CavityCResult> cavity_c;
  std::optional<CavityCprimeResult> cavity_cprime;
};

struct PointEvaluation {
  InformationSpec info;
  JcParams params;
  double concurrence = 0.0;
  double max_cross_probability = 0.0;
  double alice_total_probability = 0.0;
  CaseIFidelity case_i;
  std::array<BranchEvaluation, 5> branches;  // cases i..v
  std::vector<formulas::OutcomeLeaf> leaves;
  double f_avg = 0.0;
  formulas::AvgFidelityTerms terms;

  const BranchEvaluation& branch(CaseId c) const { return branches[static_cast<std::size_t>(c)]; }
};

inline double channel_concurrence_general(cplx alpha) { return ecs_concurrence(EcsPair::from(build_channel(alpha))); }

inline PointEvaluation evaluate_point(const InformationSpec& info, double tail_bound = 1e-12, double g = 1.0) {
  PointEvaluation pe;
  pe.info = info;
  pe.params = JcParams::for_alpha(info.alpha, g);
  const CoherentSuperposition channel = build_channel(info.alpha);
  pe.concurrence = ecs_concurrence(EcsPair::from(channel));

  const AliceStageResult alice = alice_stage(info, channel, tail_bound);
  pe.max_cross_probability = alice.max_cross_probability;
  pe.alice_total_probability = alice.total_probability;
  pe.case_i = case_i_fidelity(info, tail_bound);

  const auto policy = bob_output_policy(info.alpha, tail_bound);
  const FockState info_fock = info.fock(policy, "0");

  for (const auto& rec : alice.branches) {
    BranchEvaluation& be = pe.branches[static_cast<std::size_t>(rec.case_id)];
    be.case_id = rec.case_id;
    be.probability = rec.probability;
    be.bob_purity = rec.bob_purity;
    if (rec.bob_mode2_state) {
      const auto expected = to_fock(rec.bob_mode2_expected.normalized(), policy);
      be.bob_state_fidelity = mode_fidelity(*rec.bob_mode2_state, expected);
    }

    if (rec.case_id == CaseId::i) {
      pe.leaves.push_back({CaseId::i, std::nullopt, 0, rec.probability, pe.case_i.simulated});
      continue;
    }
    if (!rec.bob_mode2_state) continue;  // branch carries no weight

    const Sign sign = sign_of(rec.case_id);
    const FockState post_b2 = bob_stage(rec);
    be.post_b2_fidelity = fidelity(post_b2, information_vacuum_target(info, sign, policy));
    be.exchange_parity = std::real(inner(post_b2, post_b2.swapped_modes("7", "8")));

    be.cavity_c = stage_cavity_C(post_b2, pe.params, info_fock, tail_bound);
    const auto& c = *be.cavity_c;
    pe.leaves.push_back({rec.case_id, Situation::A, 0, rec.probability * c.a.probability, c.a.fidelity});
    for (const auto& b : c.b) {
      pe.leaves.push_back({rec.case_id, Situation::B, b.photons, rec.probability * b.probability, b.fidelity});
    }
    if (c.mode9_given_u) {
      be.cavity_cprime = stage_cavity_Cprime(*c.mode9_given_u, pe.params, info_fock, tail_bound);
      const auto& cp = *be.cavity_cprime;
      pe.leaves.push_back({rec.case_id, Situation::C_l, 0, rec.probability * cp.c_l.probability, cp.c_l.fidelity});
      pe.leaves.push_back({rec.case_id, Situation::C_u, 0, rec.probability * cp.c_u.probability, cp.c_u.fidelity});
    }
  }

  pe.f_avg = formulas::avg_fidelity_exact(pe.leaves);
  pe.terms = formulas::exact_sums(info, pe.params, tail_bound);
  return pe;
}

/// Sum of joint leaf probabilities for one branch and situation.
inline double situation_probability(const PointEvaluation& pe, CaseId c, Situation s) {
  double p = 0.0;
  for (const auto& l : pe.leaves) {
    if (l.case_id == c && l.situation == s) p += l.probability;
  }
  return p;
}

}  // namespace ecst
