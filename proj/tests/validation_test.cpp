#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ecst/validation.hpp"

using namespace ecst;
using namespace ecst::validation;

namespace {

const std::vector<GridPoint> kGrid{{1.0, 0.8, 0.0}, {6.0, kPi / 2, 0.0}, {12.0, 2.5, kPi / 2}};

bool flagged(const ValidationReport& r, const std::string& name) {
  const auto f = r.flags();
  return std::any_of(f.begin(), f.end(), [&](const FormulaSummary* s) { return s->name == name; });
}

}  // namespace

TEST(Validation, TamperedCheckIsFlaggedByName) {
  auto checks = default_formula_checks();
  const auto base = std::find_if(checks.begin(), checks.end(), [](const FormulaCheck& c) {
    return c.name == "nze-branch-probability";
  });
  ASSERT_NE(base, checks.end());
  FormulaCheck tampered = *base;
  tampered.name = "tampered-nze-branch-probability";
  const Extract ref = base->reference;
  tampered.reference = [ref](const PointEvaluation& pe) -> std::optional<double> { return *ref(pe) * 1.01; };
  checks.push_back(tampered);

  const auto r = run_validation(kGrid, 1e-12, checks, default_invariants(), 2);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(flagged(r, "tampered-nze-branch-probability"));
  EXPECT_FALSE(flagged(r, "nze-branch-probability"));
  EXPECT_NEAR(r.formula("tampered-nze-branch-probability")->max_rel_deviation, 0.01, 1e-9);
}

TEST(Validation, BrokenInvariantMakesReportFail) {
  auto invariants = default_invariants();
  invariants.push_back({"always-off", 1e-12, [](const PointEvaluation&) -> std::optional<double> { return 1.0; }});
  const auto r = run_validation({kGrid[0]}, 1e-12, default_formula_checks(), invariants, 1);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.invariant("always-off")->ok);
  EXPECT_TRUE(r.invariant("branch-completeness")->ok);
}

TEST(Validation, ExpectedDeviationsAreFlagged) {
  const auto r = run_validation(kGrid, 1e-12, default_formula_checks(), default_invariants(), 2);
  EXPECT_TRUE(r.ok());
  for (const char* name : {"fock-coefficients", "odd-cat-weight", "ground-probability (-)", "avg-fidelity-simplified",
                           "avg-fidelity-expansion"}) {
    EXPECT_TRUE(flagged(r, name)) << name;
  }
  for (const char* name : {"concurrence", "case-i-probability", "case-i-fidelity", "situation-a-probability (-)",
                           "situation-a-fidelity (-)", "avg-fidelity-sum", "avg-fidelity-simplified-rederived",
                           "ground-probability-bracketed (-)", "y-moment k=2"}) {
    EXPECT_FALSE(flagged(r, name)) << name;
  }
}

TEST(Validation, RelativeDeviationHandlesNonFinite) {
  EXPECT_NEAR(relative_deviation(1.01, 1.0), 0.01, 1e-15);
  EXPECT_TRUE(std::isinf(relative_deviation(std::nan(""), 1.0)));
  EXPECT_NEAR(relative_deviation(1e-9, 0.0), 1e-3, 1e-15);
}
