#pragma once

// Finite superpositions of multimode coherent states. Closed under the
// symmetric beam splitter and phase flips, with exact Gram-matrix inner
// products; used for the analytic side of every comparison and to seed the
// Fock simulator.

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "ecst/error.hpp"
#include "ecst/fock.hpp"

namespace ecst {

/// <a|b> for single-mode coherent states, phase included:
/// exp(-|a|^2/2 - |b|^2/2 + conj(a) b).
inline cplx coherent_overlap(cplx a, cplx b) {
  return std::exp(-0.5 * std::norm(a) - 0.5 * std::norm(b) + std::conj(a) * b);
}

struct CoherentTerm {
  cplx coeff;
  std::vector<cplx> labels;  // one coherent amplitude per mode
};

class CoherentSuperposition {
 public:
  CoherentSuperposition() = default;
  explicit CoherentSuperposition(std::vector<std::string> modes) : modes_(std::move(modes)) {
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (modes_[i] == modes_[j]) throw Error(ErrorCode::label_clash, "duplicate mode " + modes_[i]);
      }
    }
  }

  const std::vector<std::string>& modes() const { return modes_; }
  const std::vector<CoherentTerm>& terms() const { return terms_; }
  std::size_t num_terms() const { return terms_.size(); }

  std::size_t mode_index(const std::string& label) const {
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (modes_[i] == label) return i;
    }
    throw Error(ErrorCode::unknown_mode, "no mode labelled " + label);
  }

  /// Appends a term; a term with exactly equal labels is merged instead.
  CoherentSuperposition& add(cplx coeff, std::vector<cplx> labels) {
    if (labels.size() != modes_.size()) throw Error(ErrorCode::mode_mismatch, "term rank differs from mode count");
    for (auto& t : terms_) {
      if (t.labels == labels) {
        t.coeff += coeff;
        return *this;
      }
    }
    terms_.push_back({coeff, std::move(labels)});
    return *this;
  }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& ti : terms_) {
      for (const auto& tj : terms_) s += std::real(std::conj(ti.coeff) * tj.coeff * label_overlap(ti, tj));
    }
    return s;
  }

  CoherentSuperposition scaled(cplx factor) const {
    CoherentSuperposition out = *this;
    for (auto& t : out.terms_) t.coeff *= factor;
    return out;
  }

  CoherentSuperposition normalized() const {
    const double n2 = norm_sq();
    if (!(n2 > 0.0)) throw Error(ErrorCode::zero_norm, "superposition has zero norm");
    return scaled(1.0 / std::sqrt(n2));
  }

  CoherentSuperposition relabeled(const std::string& from, const std::string& to) const {
    CoherentSuperposition out = *this;
    const std::size_t m = mode_index(from);
    for (std::size_t i = 0; i < modes_.size(); ++i) {
      if (i != m && modes_[i] == to) throw Error(ErrorCode::label_clash, "label " + to + " already present");
    }
    out.modes_[m] = to;
    return out;
  }

  /// pi phase shift a -> -a on one mode.
  CoherentSuperposition phase_flipped(const std::string& mode) const {
    CoherentSuperposition out = *this;
    const std::size_t m = mode_index(mode);
    for (auto& t : out.terms_) t.labels[m] = -t.labels[m];
    return out;
  }

  double max_mean_photon() const {
    double mu = 0.0;
    for (const auto& t : terms_) {
      for (const auto& l : t.labels) mu = std::max(mu, std::norm(l));
    }
    return mu;
  }

  static cplx label_overlap(const CoherentTerm& a, const CoherentTerm& b) {
    cplx p = 1.0;
    for (std::size_t m = 0; m < a.labels.size(); ++m) p *= coherent_overlap(a.labels[m], b.labels[m]);
    return p;
  }

 private:
  std::vector<std::string> modes_;
  std::vector<CoherentTerm> terms_;
};

inline CoherentSuperposition single_mode(const std::string& mode,
                                         std::initializer_list<std::pair<cplx, cplx>> coeff_label) {
  CoherentSuperposition s({mode});
  for (const auto& [c, l] : coeff_label) s.add(c, {l});
  return s;
}

/// Tensor product of superpositions over disjoint modes.
inline CoherentSuperposition tensor(const CoherentSuperposition& a, const CoherentSuperposition& b) {
  auto modes = a.modes();
  for (const auto& m : b.modes()) {
    if (std::find(modes.begin(), modes.end(), m) != modes.end()) {
      throw Error(ErrorCode::label_clash, "mode " + m + " appears twice in tensor");
    }
    modes.push_back(m);
  }
  CoherentSuperposition out(modes);
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      auto labels = ta.labels;
      labels.insert(labels.end(), tb.labels.begin(), tb.labels.end());
      out.add(ta.coeff * tb.coeff, std::move(labels));
    }
  }
  return out;
}

/// <a|b>; both must be over the same ordered modes.
inline cplx overlap(const CoherentSuperposition& a, const CoherentSuperposition& b) {
  if (a.modes() != b.modes()) throw Error(ErrorCode::mode_mismatch, "overlap over different modes");
  cplx s = 0.0;
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) s += std::conj(ta.coeff) * tb.coeff * CoherentSuperposition::label_overlap(ta, tb);
  }
  return s;
}

/// Per-term label map (a, b) -> ((a+b)/sqrt2, (a-b)/sqrt2); coefficients kept.
inline CoherentSuperposition apply_beamsplitter(const CoherentSuperposition& s, const std::string& mode_a,
                                                const std::string& mode_b, const std::string& out_a = {},
                                                const std::string& out_b = {}) {
  const std::size_t ma = s.mode_index(mode_a);
  const std::size_t mb = s.mode_index(mode_b);
  if (ma == mb) throw Error(ErrorCode::mode_mismatch, "beam splitter needs two distinct modes");
  auto modes = s.modes();
  if (!out_a.empty()) modes[ma] = out_a;
  if (!out_b.empty()) modes[mb] = out_b;
  CoherentSuperposition out(modes);
  const double r = 1.0 / std::sqrt(2.0);
  for (const auto& t : s.terms()) {
    auto labels = t.labels;
    labels[ma] = (t.labels[ma] + t.labels[mb]) * r;
    labels[mb] = (t.labels[ma] - t.labels[mb]) * r;
    out.add(t.coeff, std::move(labels));
  }
  return out;
}

/// Two-term, two-mode entangled coherent state c1|b1,g1> + c2|b2,g2>.
struct EcsPair {
  cplx c1 = 1.0;
  cplx c2 = -1.0;
  cplx beta1 = 0.0;
  cplx gamma1 = 0.0;
  cplx beta2 = 0.0;
  cplx gamma2 = 0.0;

  static EcsPair from(const CoherentSuperposition& s) {
    if (s.modes().size() != 2 || s.num_terms() != 2) {
      throw Error(ErrorCode::invalid_input, "an ECS pair has exactly two modes and two terms");
    }
    const auto& t = s.terms();
    return {t[0].coeff, t[1].coeff, t[0].labels[0], t[0].labels[1], t[1].labels[0], t[1].labels[1]};
  }

  CoherentSuperposition to_superposition(const std::string& mode_a, const std::string& mode_b) const {
    CoherentSuperposition s({mode_a, mode_b});
    s.add(c1, {beta1, gamma1});
    s.add(c2, {beta2, gamma2});
    return s;
  }
};

/// Concurrence of a two-term ECS after orthogonalising each mode's pair of
/// coherent components: 2|c1 c2| sqrt((1-|<b1|b2>|^2)(1-|<g1|g2>|^2)) / norm^2.
inline double ecs_concurrence(const EcsPair& e) {
  const double norm2 = std::norm(e.c1) + std::norm(e.c2) +
                       2.0 * std::real(std::conj(e.c1) * e.c2 * coherent_overlap(e.beta1, e.beta2) *
                                       coherent_overlap(e.gamma1, e.gamma2));
  if (!(norm2 > 0.0)) throw Error(ErrorCode::zero_norm, "ECS pair has zero norm");
  // 1 - |<a|b>|^2 = -expm1(-|a-b|^2), kept accurate for nearly equal labels.
  const double da = -std::expm1(-std::norm(e.beta1 - e.beta2));
  const double db = -std::expm1(-std::norm(e.gamma1 - e.gamma2));
  const double c = 2.0 * std::abs(e.c1 * e.c2) * std::sqrt(da * db) / norm2;
  return std::clamp(c, 0.0, 1.0);
}

/// Truncated-Fock image with one dimension per mode (in mode order).
inline FockState to_fock(const CoherentSuperposition& s, const std::vector<std::size_t>& dims,
                         double tail_bound = 1e-12) {
  if (dims.size() != s.modes().size()) throw Error(ErrorCode::mode_mismatch, "one dimension per mode required");
  std::vector<cplx> amps(FockState::product(dims), 0.0);
  double residual = 0.0;
  for (const auto& t : s.terms()) {
    std::vector<cplx> term{t.coeff};
    for (std::size_t m = 0; m < dims.size(); ++m) {
      TruncationPolicy p;
      p.dim = dims[m];
      p.tail_bound = tail_bound;
      p.max_mean_photon = std::norm(t.labels[m]);
      require_cutoff(t.labels[m], p);
      residual = std::max(residual, poisson_tail(std::norm(t.labels[m]), dims[m]));
      const auto c = coherent_amplitudes(t.labels[m], dims[m]);
      std::vector<cplx> next(term.size() * c.size());
      for (std::size_t i = 0; i < term.size(); ++i) {
        for (std::size_t j = 0; j < c.size(); ++j) next[i * c.size() + j] = term[i] * c[j];
      }
      term = std::move(next);
    }
    for (std::size_t i = 0; i < amps.size(); ++i) amps[i] += term[i];
  }
  return FockState(s.modes(), dims, std::move(amps), residual);
}

inline FockState to_fock(const CoherentSuperposition& s, const TruncationPolicy& policy) {
  return to_fock(s, std::vector<std::size_t>(s.modes().size(), policy.dim), policy.tail_bound);
}

}  // namespace ecst
