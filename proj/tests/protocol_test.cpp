#include <gtest/gtest.h>

#include <cmath>

#include "ecst/formulas.hpp"
#include "ecst/grid.hpp"
#include "ecst/pipeline.hpp"

using namespace ecst;

TEST(AliceStage, BranchProbabilitiesMatchClosedForms) {
  for (double mu : {0.5, 2.0, 7.0}) {
    for (double theta : {0.0, 1.0, kPi}) {
      const auto info = information_at({mu, theta, 0.5});
      const auto alice = alice_stage(info, build_channel(info.alpha));
      double total = 0.0;
      for (const auto& b : alice.branches) {
        EXPECT_NEAR(b.probability, formulas::branch_probability(b.case_id, info.x, info.prob_i0), 1e-9)
            << mu << " " << theta << " " << to_string(b.case_id);
        total += b.probability;
      }
      EXPECT_NEAR(total, 1.0, 1e-9);
      EXPECT_LT(alice.max_cross_probability, 1e-10);
    }
  }
}

TEST(AliceStage, BobStatesFollowTheTable) {
  const auto info = information_at({3.0, 1.3, 0.9});
  const auto alice = alice_stage(info, build_channel(info.alpha));
  const auto policy = bob_output_policy(info.alpha, 1e-12);
  for (const auto& b : alice.branches) {
    ASSERT_TRUE(b.bob_mode2_state);
    EXPECT_NEAR(mode_fidelity(*b.bob_mode2_state, to_fock(b.bob_mode2_expected.normalized(), policy)), 1.0, 1e-9);
    EXPECT_NEAR(b.bob_purity, 1.0, 1e-9);
  }
}

TEST(AliceStage, RejectsMismatchedChannel) {
  const auto info = information_at({2.0, 1.0, 0.0});
  EXPECT_THROW(alice_stage(info, build_channel(2.0)), Error);
}

TEST(BobStage, OutputIsInformationOnOneModeVacuumOnTheOther) {
  const auto info = information_at({4.0, 2.0, 1.0});
  const auto alice = alice_stage(info, build_channel(info.alpha));
  const auto policy = bob_output_policy(info.alpha, 1e-12);
  for (const auto& b : alice.branches) {
    if (b.case_id == CaseId::i) {
      EXPECT_THROW(bob_stage(b), Error);
      continue;
    }
    const auto out = bob_stage(b);
    EXPECT_NEAR(fidelity(out, information_vacuum_target(info, sign_of(b.case_id), policy)), 1.0, 1e-9);
  }
}

TEST(CaseI, FidelityMatchesClosedForm) {
  for (double mu : {0.5, 1.0, 3.0, 8.0}) {
    const auto info = information_at({mu, 2.2, 0.0});
    const auto f = case_i_fidelity(info);
    EXPECT_NEAR(f.simulated, f.closed_form, 1e-10);
    EXPECT_NEAR(f.simulated, formulas::fidelity_case_i(info), 1e-10);
  }
}

TEST(Pipeline, OutcomeTreeIsCompleteAndMatchesSums) {
  for (double mu : {1.0, 5.0, 12.0}) {
    const auto pe = evaluate_point(information_at({mu, kPi / 2, 0.0}));
    double total = 0.0;
    for (const auto& l : pe.leaves) total += l.probability;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_NEAR(pe.f_avg, formulas::avg_fidelity_from_parts(pe.info, pe.terms), 1e-9);
    EXPECT_NEAR(pe.terms.s1 + pe.terms.s2, 1.0 - pe.info.prob_i0, 1e-10);
    for (CaseId c : {CaseId::ii, CaseId::iii}) EXPECT_NEAR(pe.branch(c).exchange_parity, -1.0, 1e-9);
    for (CaseId c : {CaseId::iv, CaseId::v}) EXPECT_NEAR(pe.branch(c).exchange_parity, 1.0, 1e-9);
  }
}

TEST(Pipeline, TreeRejectsIncompleteLeaves) {
  std::vector<formulas::OutcomeLeaf> leaves{{CaseId::i, std::nullopt, 0, 0.6, 1.0}};
  EXPECT_THROW(formulas::avg_fidelity_exact(leaves), Error);
}

TEST(Grid, ParallelMapKeepsOrderAndCapturesErrors) {
  std::vector<int> items{1, 2, -3, 4, 5, 6, 7};
  auto out = parallel_map(
      items,
      [](int v) {
        if (v < 0) throw Error(ErrorCode::invalid_input, "negative");
        return v * 10;
      },
      3);
  ASSERT_EQ(out.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 0) {
      EXPECT_FALSE(out[i].value);
      EXPECT_NE(out[i].error.find("negative"), std::string::npos);
    } else {
      EXPECT_EQ(*out[i].value, items[i] * 10);
    }
  }
  EXPECT_THROW(information_at({0.0, 1.0, 0.0}), Error);
}
