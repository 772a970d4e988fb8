#include <gtest/gtest.h>

#include <cmath>

#include "ecst/fock.hpp"

using namespace ecst;

namespace {

// Tail of Poisson(mean) from `dim` up, as 1 - cdf accumulated in long double.
double poisson_tail_by_complement(double mean, std::size_t dim) {
  long double term = std::exp(-static_cast<long double>(mean));
  long double cdf = 0.0L;
  for (std::size_t n = 0; n < dim; ++n) {
    cdf += term;
    term *= mean / static_cast<long double>(n + 1);
  }
  return static_cast<double>(1.0L - cdf);
}

FockState two_mode_number(std::size_t d, std::size_t n, std::size_t m) {
  return tensor({FockState::number_state("a", d, n), FockState::number_state("b", d, m)});
}

}  // namespace

TEST(PoissonTail, AgreesWithComplementOfCdf) {
  for (double mean : {0.5, 3.0, 10.0}) {
    for (std::size_t dim : {1u, 5u, 12u, 20u}) {
      const double oracle = poisson_tail_by_complement(mean, dim);
      if (oracle < 1e-10) continue;  // complement loses digits there
      EXPECT_NEAR(poisson_tail(mean, dim) / oracle, 1.0, 1e-9) << mean << " " << dim;
    }
  }
  EXPECT_DOUBLE_EQ(poisson_tail(0.0, 3), 0.0);
}

TEST(TruncationPolicy, MeetsTailBound) {
  for (double mean : {0.5, 10.0, 60.0}) {
    const auto p = TruncationPolicy::for_mean(mean, 1e-12);
    EXPECT_LT(poisson_tail(mean, p.dim), 1e-12);
    EXPECT_TRUE(p.covers(mean));
  }
  EXPECT_THROW(TruncationPolicy::for_mean(-1.0), Error);
  EXPECT_THROW(TruncationPolicy::for_mean(1.0, 0.0), Error);
}

TEST(CoherentState, AmplitudesAndOverlap) {
  const auto p = TruncationPolicy::for_mean(1.0);
  const auto plus = coherent_state(1.0, p);
  const auto minus = coherent_state(-1.0, p);
  EXPECT_NEAR(plus.norm_sq(), 1.0, 1e-12);
  // |<1|-1>|^2 = exp(-|1 - (-1)|^2) = e^-4.
  EXPECT_NEAR(std::norm(inner(plus, minus)), std::exp(-4.0), 1e-14);
  EXPECT_NEAR(std::abs(plus.at({3}) - std::exp(-0.5) / std::sqrt(6.0)), 0.0, 1e-15);
}

TEST(CatStates, ZeroNzeOddAreOrthonormal) {
  for (double a : {0.7, 2.0, 4.5}) {
    const auto p = TruncationPolicy::for_mean(a * a);
    const FockState basis[3] = {FockState::number_state("0", p.dim, 0), nze_state(a, p), cat_state(a, Parity::odd, p)};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(std::abs(inner(basis[i], basis[j])), i == j ? 1.0 : 0.0, 1e-12) << a << " " << i << j;
      }
    }
  }
}

TEST(CatStates, ParitySupport) {
  const auto p = TruncationPolicy::for_mean(4.0);
  const auto even = cat_state(2.0, Parity::even, p);
  const auto odd = cat_state(2.0, Parity::odd, p);
  for (std::size_t n = 0; n < p.dim; ++n) {
    if (n % 2) {
      EXPECT_EQ(even.at({n}), cplx(0.0));
    } else {
      EXPECT_EQ(odd.at({n}), cplx(0.0));
    }
  }
}

TEST(BeamSplitter, UnitaryOnTheConservedBlocks) {
  const std::size_t d = 9;
  std::vector<std::pair<std::size_t, std::size_t>> inputs;
  for (std::size_t n = 0; n < d; ++n) {
    for (std::size_t m = 0; n + m < d; ++m) inputs.emplace_back(n, m);
  }
  std::vector<FockState> out;
  for (auto [n, m] : inputs) out.push_back(beamsplitter(two_mode_number(d, n, m), "a", "b"));
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) {
      EXPECT_NEAR(std::abs(inner(out[i], out[j])), i == j ? 1.0 : 0.0, 1e-12);
    }
  }
}

TEST(BeamSplitter, SquareIsIdentityAndPhotonNumberConserved) {
  const std::size_t d = 12;
  for (std::size_t n = 0; n < 7; ++n) {
    for (std::size_t m = 0; m + n < 11; ++m) {
      const auto in = two_mode_number(d, n, m);
      const auto once = beamsplitter(in, "a", "b");
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t l = 0; l < d; ++l) {
          if (k + l != n + m) {
            EXPECT_EQ(once.at({k, l}), cplx(0.0));
          }
        }
      }
      const auto twice = beamsplitter(once, "a", "b");
      EXPECT_NEAR(fidelity(twice, in), 1.0, 1e-12);
      EXPECT_NEAR(std::real(inner(in, twice)), 1.0, 1e-12);
    }
  }
}

TEST(BeamSplitter, KnownHongOuMandelAmplitudes) {
  // |1,1> -> (|2,0> - |0,2>)/sqrt2 for this sign convention.
  const auto out = beamsplitter(two_mode_number(4, 1, 1), "a", "b");
  EXPECT_NEAR(std::real(out.at({2, 0})), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::real(out.at({0, 2})), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(out.at({1, 1})), 0.0, 1e-15);
}

TEST(BeamSplitter, RejectsBadModes) {
  const auto s = two_mode_number(4, 0, 0);
  EXPECT_THROW(beamsplitter(s, "a", "a"), Error);
  EXPECT_THROW(beamsplitter(s, "a", "z"), Error);
  const auto uneven = tensor({FockState::number_state("a", 3, 0), FockState::number_state("b", 4, 0)});
  EXPECT_THROW(beamsplitter(uneven, "a", "b"), Error);
}

TEST(PhotonClasses, ProjectorsAreComplete) {
  const auto p = TruncationPolicy::for_mean(6.0);
  const auto s = tensor({coherent_state(cplx(1.2, 0.7), p, "a"), coherent_state(-1.5, p, "b")});
  const auto mixed = beamsplitter(s, "a", "b");
  double total = 0.0;
  for (auto c : {PhotonClass::zero, PhotonClass::nze, PhotonClass::odd}) {
    const auto m = measure_photon_class(mixed, "a", c);
    total += m.probability;
    if (m.collapsed) {
      EXPECT_NEAR(m.collapsed->norm_sq(), 1.0, 1e-12);
    }
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(FockState, ConstructionErrors) {
  EXPECT_THROW(FockState({"a", "a"}, {2, 2}, std::vector<cplx>(4)), Error);
  EXPECT_THROW(FockState({"a"}, {3}, std::vector<cplx>(2)), Error);
  EXPECT_THROW(FockState::number_state("a", 3, 3), Error);
}

TEST(FockState, SwapAndSlice) {
  const auto s = two_mode_number(3, 2, 0);
  const auto sw = s.swapped_modes("a", "b");
  EXPECT_EQ(sw.at({0, 2}), cplx(1.0));
  EXPECT_EQ(s.slice("b", 0).at({2}), cplx(1.0));
}

TEST(ModeExtraction, ProductStateIsPure) {
  const auto p = TruncationPolicy::for_mean(2.0);
  const auto s = tensor({cat_state(1.4, Parity::odd, p, "a"), coherent_state(0.3, p, "b")});
  const auto e = principal_mode_state(s, "a");
  EXPECT_NEAR(e.purity, 1.0, 1e-12);
  EXPECT_NEAR(mode_fidelity(e.state, cat_state(1.4, Parity::odd, p, "a")), 1.0, 1e-12);
}
