#include <gtest/gtest.h>

#include <cmath>

#include "ecst/cavity.hpp"
#include "ecst/formulas.hpp"

using namespace ecst;

namespace {

// <n_field + sigma_u> and norm of a field (x) atom state.
std::pair<double, double> excitations(const FockState& s, const std::string& field, const std::string& atom) {
  const auto wf = s.level_weights(field);
  const auto wa = s.level_weights(atom);
  double n = 0.0;
  for (std::size_t k = 0; k < wf.size(); ++k) n += k * wf[k];
  return {n + wa[1], s.norm_sq()};
}

}  // namespace

TEST(JaynesCummings, ConservesExcitationsAndNorm) {
  const auto params = JcParams::for_alpha(2.3);
  const auto p = TruncationPolicy::for_mean(5.29);
  for (auto atom : {AtomState::ground(), AtomState{std::sqrt(0.3), cplx(0.0, std::sqrt(0.7))}}) {
    const auto field = cat_state(2.3, Parity::even, p, "f");
    const auto in = tensor({field, atom.as_mode("q")});
    const auto out = jc_evolve(in, "f", "q", params);
    const auto [n_in, norm_in] = excitations(in, "f", "q");
    const auto [n_out, norm_out] = excitations(out, "f", "q");
    EXPECT_NEAR(n_out, n_in, 1e-12);
    EXPECT_NEAR(norm_out, norm_in, 1e-12);
  }
}

TEST(JaynesCummings, FullTransferWhenLevelMatchesMeanPhotons) {
  // phi_n = pi/2 exactly at n = |alpha|^2.
  const auto params = JcParams::for_alpha(2.0);
  const auto out = jc_evolve(FockState::number_state("f", 10, 4), "f", AtomState::ground(), "q", params);
  EXPECT_NEAR(std::norm(out.at({3, 1})), 1.0, 1e-15);
  const auto back = jc_evolve(FockState::number_state("f", 10, 3), "f", AtomState::excited(), "q", params);
  EXPECT_NEAR(std::norm(back.at({4, 0})), 1.0, 1e-15);
}

TEST(JaynesCummings, VacuumGroundIsStationaryAndLeakIsReported) {
  const auto params = JcParams::for_alpha(1.0);
  const auto out = jc_evolve(FockState::number_state("f", 4, 0), "f", AtomState::ground(), "q", params);
  EXPECT_EQ(out.at({0, 0}), cplx(1.0));
  EXPECT_THROW(jc_evolve(FockState::number_state("f", 4, 3), "f", AtomState::excited(), "q", params), Error);
  EXPECT_THROW(JcParams::for_alpha(0.0), Error);
}

TEST(CavityC, SituationAContractOnIdealInput) {
  for (double a : {1.0, 2.0, 3.5}) {
    for (double theta : {0.4, 1.6, 2.8}) {
      const auto info = make_information_bloch(a, theta, 0.3);
      const auto p = TruncationPolicy::for_mean(a * a);
      const auto params = JcParams::for_alpha(a);
      const auto ref = info.fock(p, "0");
      for (Sign sign : {Sign::minus, Sign::plus}) {
        const auto in = information_vacuum_target(info, sign, p);
        const auto r = stage_cavity_C(in, params, ref);
        const double p0 = info.prob_i0;
        EXPECT_NEAR(r.a.probability, formulas::prob_situation_a(sign, p0), 1e-9);
        EXPECT_NEAR(r.a.fidelity, formulas::fidelity_situation_a(sign, p0), 1e-9);
        EXPECT_NEAR(r.prob_l + r.prob_u, 1.0, 1e-12);
        EXPECT_NEAR(r.mode7_excited_given_u, 0.0, 1e-12);
        if (sign == Sign::minus) {
          EXPECT_NEAR(r.a.probability, 0.5, 1e-9);
          EXPECT_NEAR(r.a.fidelity, 1.0 - p0, 1e-9);
        }
      }
    }
  }
}

TEST(CavityCprime, OutcomesCarryTheMode9Weight) {
  const auto info = make_information_bloch(2.0, 1.0, 0.0);
  const auto p = TruncationPolicy::for_mean(4.0);
  const auto params = JcParams::for_alpha(2.0);
  const auto r = stage_cavity_C(information_vacuum_target(info, Sign::minus, p), params, info.fock(p));
  ASSERT_TRUE(r.mode9_given_u);
  const auto c = stage_cavity_Cprime(*r.mode9_given_u, params, info.fock(p));
  EXPECT_NEAR(c.c_l.probability + c.c_u.probability, r.prob_u, 1e-12);
  EXPECT_THROW(stage_cavity_Cprime(info.fock(p, "7"), params, info.fock(p)), Error);
}
