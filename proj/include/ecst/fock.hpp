#pragma once

// Truncated Fock-space states over named bosonic modes, with the
// linear-optics, parity-class measurement and fidelity primitives used by the
// teleportation pipeline. All operations are pure: they take states by const
// reference and return new states.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecst/error.hpp"

namespace ecst {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Probability that a Poisson(mean) variable is >= dim, i.e. the weight a
/// coherent state of |amplitude|^2 = mean loses when truncated to levels
/// 0..dim-1. Summed term by term from `dim` upward in log space.
inline double poisson_tail(double mean, std::size_t dim) {
  if (mean <= 0.0) return 0.0;
  double log_term = -mean + static_cast<double>(dim) * std::log(mean) -
                    std::lgamma(static_cast<double>(dim) + 1.0);
  double sum = 0.0;
  for (std::size_t n = dim;; ++n) {
    const double term = std::exp(log_term);
    sum += term;
    const double ratio = mean / static_cast<double>(n + 1);
    // Past the mode the terms fall geometrically; stop once they cannot
    // move the sum.
    if (ratio < 1.0 && term < 1e-300 + sum * 1e-17) break;
    if (n > dim + 100000) break;
    log_term += std::log(ratio);
  }
  return sum;
}

/// Per-mode Fock cutoff chosen from the largest mean photon number that has
/// to be represented.
struct TruncationPolicy {
  double max_mean_photon = 0.0;
  std::size_t dim = 2;
  double tail_bound = 1e-12;

  /// dim = ceil(mu + 12 sqrt(mu + 1) + 20), grown further if the requested
  /// tail bound is tighter than the rule delivers.
  static TruncationPolicy for_mean(double mean, double tail_bound = 1e-12) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
      throw Error(ErrorCode::invalid_input, "mean photon number must be finite and >= 0");
    }
    if (!(tail_bound > 0.0)) {
      throw Error(ErrorCode::invalid_input, "tail bound must be positive");
    }
    TruncationPolicy p;
    p.max_mean_photon = mean;
    p.tail_bound = tail_bound;
    p.dim = static_cast<std::size_t>(std::ceil(mean + 12.0 * std::sqrt(mean + 1.0) + 20.0));
    while (poisson_tail(mean, p.dim) >= tail_bound) ++p.dim;
    return p;
  }

  bool covers(double mean) const { return dim >= 2 && poisson_tail(mean, dim) < tail_bound; }
};

/// Dense amplitude tensor over a list of named modes. Index order is
/// row-major in the label order (last mode fastest).
class FockState {
 public:
  FockState() = default;

  FockState(std::vector<std::string> labels, std::vector<std::size_t> dims,
            std::vector<cplx> amps, double truncation_residual = 0.0)
      : labels_(std::move(labels)),
        dims_(std::move(dims)),
        amps_(std::move(amps)),
        residual_(truncation_residual) {
    if (labels_.size() != dims_.size()) {
      throw Error(ErrorCode::invalid_input, "labels and dims differ in length");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (dims_[i] == 0) throw Error(ErrorCode::invalid_input, "mode dimension must be positive");
      for (std::size_t j = 0; j < i; ++j) {
        if (labels_[i] == labels_[j]) throw Error(ErrorCode::label_clash, "duplicate mode label " + labels_[i]);
      }
    }
    const std::size_t expected = product(dims_);
    if (amps_.size() != expected) {
      throw Error(ErrorCode::dimension_mismatch, "amplitude tensor size does not match dims");
    }
  }

  static FockState vacuum(std::vector<std::string> labels, std::vector<std::size_t> dims) {
    std::vector<cplx> amps(product(dims));
    if (!amps.empty()) amps[0] = 1.0;
    return FockState(std::move(labels), std::move(dims), std::move(amps));
  }

  static FockState number_state(std::string label, std::size_t dim, std::size_t n) {
    if (n >= dim) throw Error(ErrorCode::cutoff_too_small, "Fock level outside the cutoff");
    std::vector<cplx> amps(dim);
    amps[n] = 1.0;
    return FockState({std::move(label)}, {dim}, std::move(amps));
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  const std::vector<cplx>& amps() const { return amps_; }
  std::size_t size() const { return amps_.size(); }
  std::size_t num_modes() const { return labels_.size(); }
  double truncation_residual() const { return residual_; }

  bool has_mode(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
  }

  std::size_t mode_index(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw Error(ErrorCode::unknown_mode, "no mode labelled " + label);
    return static_cast<std::size_t>(it - labels_.begin());
  }

  std::size_t dim(const std::string& label) const { return dims_[mode_index(label)]; }

  std::size_t stride(std::size_t mode) const {
    std::size_t s = 1;
    for (std::size_t j = mode + 1; j < dims_.size(); ++j) s *= dims_[j];
    return s;
  }

  cplx at(std::initializer_list<std::size_t> index) const {
    if (index.size() != dims_.size()) throw Error(ErrorCode::dimension_mismatch, "index rank mismatch");
    std::size_t off = 0;
    std::size_t m = 0;
    for (std::size_t n : index) {
      if (n >= dims_[m]) return 0.0;
      off = off * dims_[m] + n;
      ++m;
    }
    return amps_[off];
  }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }

  FockState normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw Error(ErrorCode::zero_norm, "cannot normalise a zero state");
    return scaled(1.0 / n);
  }

  FockState scaled(cplx factor) const {
    FockState out = *this;
    for (auto& a : out.amps_) a *= factor;
    return out;
  }

  /// Linear combination this + factor * other; structures must agree.
  FockState plus(const FockState& other, cplx factor = 1.0) const {
    require_same_structure(other);
    FockState out = *this;
    for (std::size_t i = 0; i < amps_.size(); ++i) out.amps_[i] += factor * other.amps_[i];
    out.residual_ = std::max(residual_, other.residual_);
    return out;
  }

  FockState relabeled(const std::string& from, const std::string& to) const {
    const std::size_t m = mode_index(from);
    if (from != to && has_mode(to)) throw Error(ErrorCode::label_clash, "label " + to + " already present");
    FockState out = *this;
    out.labels_[m] = to;
    return out;
  }

  /// Pads with zeros or drops levels of one mode.
  FockState resized(const std::string& label, std::size_t new_dim) const {
    if (new_dim == 0) throw Error(ErrorCode::invalid_input, "dimension must be positive");
    const std::size_t m = mode_index(label);
    std::vector<std::size_t> nd = dims_;
    nd[m] = new_dim;
    FockState out(labels_, nd, std::vector<cplx>(product(nd)), residual_);
    const std::size_t outer = product_range(0, m);
    const std::size_t inner = stride(m);
    const std::size_t keep = std::min(new_dim, dims_[m]);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t n = 0; n < keep; ++n) {
        const cplx* src = &amps_[(o * dims_[m] + n) * inner];
        cplx* dst = &out.amps_[(o * new_dim + n) * inner];
        std::copy(src, src + inner, dst);
      }
    }
    return out;
  }

  /// Multiplies every amplitude by f(n) where n is the level of `label`.
  template <typename F>
  FockState with_level_factor(const std::string& label, F&& f) const {
    const std::size_t m = mode_index(label);
    const std::size_t inner = stride(m);
    const std::size_t d = dims_[m];
    std::vector<cplx> factors(d);
    for (std::size_t n = 0; n < d; ++n) factors[n] = f(n);
    FockState out = *this;
    const std::size_t outer = amps_.size() / (d * inner);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t n = 0; n < d; ++n) {
        cplx* p = &out.amps_[(o * d + n) * inner];
        for (std::size_t i = 0; i < inner; ++i) p[i] *= factors[n];
      }
    }
    return out;
  }

  /// Zeroes every amplitude whose level in `label` fails `keep`.
  template <typename Pred>
  FockState projected(const std::string& label, Pred&& keep) const {
    const std::size_t m = mode_index(label);
    const std::size_t inner = stride(m);
    const std::size_t d = dims_[m];
    FockState out = *this;
    const std::size_t outer = amps_.size() / (d * inner);
    for (std::size_t n = 0; n < d; ++n) {
      if (keep(n)) continue;
      for (std::size_t o = 0; o < outer; ++o) {
        cplx* p = &out.amps_[(o * d + n) * inner];
        std::fill(p, p + inner, cplx(0.0));
      }
    }
    return out;
  }

  /// Conditional (unnormalised) state of the remaining modes given that
  /// `label` holds exactly n photons.
  FockState slice(const std::string& label, std::size_t n) const {
    const std::size_t m = mode_index(label);
    std::vector<std::string> nl;
    std::vector<std::size_t> nd;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (i == m) continue;
      nl.push_back(labels_[i]);
      nd.push_back(dims_[i]);
    }
    std::vector<cplx> out(product(nd));
    if (n < dims_[m]) {
      const std::size_t outer = product_range(0, m);
      const std::size_t inner = stride(m);
      for (std::size_t o = 0; o < outer; ++o) {
        const cplx* src = &amps_[(o * dims_[m] + n) * inner];
        std::copy(src, src + inner, &out[o * inner]);
      }
    }
    return FockState(std::move(nl), std::move(nd), std::move(out), residual_);
  }

  /// Exchanges the contents of two equal-dimension modes, keeping labels.
  FockState swapped_modes(const std::string& a, const std::string& b) const {
    const std::size_t ma = mode_index(a);
    const std::size_t mb = mode_index(b);
    if (dims_[ma] != dims_[mb]) throw Error(ErrorCode::dimension_mismatch, "swap needs equal dims");
    if (ma == mb) return *this;
    FockState out = *this;
    const std::size_t sa = stride(ma);
    const std::size_t sb = stride(mb);
    const std::size_t d = dims_[ma];
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      const std::size_t na = (i / sa) % d;
      const std::size_t nb = (i / sb) % d;
      const std::size_t j = i - na * sa - nb * sb + nb * sa + na * sb;
      out.amps_[j] = amps_[i];
    }
    return out;
  }

  /// Photon-number distribution of one mode (marginal, unnormalised).
  std::vector<double> level_weights(const std::string& label) const {
    const std::size_t m = mode_index(label);
    const std::size_t inner = stride(m);
    const std::size_t d = dims_[m];
    std::vector<double> w(d, 0.0);
    for (std::size_t i = 0; i < amps_.size(); ++i) w[(i / inner) % d] += std::norm(amps_[i]);
    return w;
  }

  double mean_photons(const std::string& label) const {
    const auto w = level_weights(label);
    double s = 0.0;
    double t = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      s += static_cast<double>(n) * w[n];
      t += w[n];
    }
    return s / t;
  }

  void require_same_structure(const FockState& other) const {
    if (labels_ != other.labels_) throw Error(ErrorCode::mode_mismatch, "states carry different mode labels");
    if (dims_ != other.dims_) throw Error(ErrorCode::dimension_mismatch, "states carry different dims");
  }

  /// Offsets of every amplitude whose levels in modes `a` and `b` are zero.
  std::vector<std::size_t> base_offsets(std::size_t a, std::size_t b) const {
    std::vector<std::size_t> bases;
    const std::size_t sa = stride(a);
    const std::size_t sb = stride(b);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if ((i / sa) % dims_[a] == 0 && (i / sb) % dims_[b] == 0) bases.push_back(i);
    }
    return bases;
  }

  std::vector<cplx>& mutable_amps() { return amps_; }

  static std::size_t product(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::size_t product_range(std::size_t begin, std::size_t end) const {
    std::size_t p = 1;
    for (std::size_t i = begin; i < end; ++i) p *= dims_[i];
    return p;
  }

  std::vector<std::string> labels_;
  std::vector<std::size_t> dims_;
  std::vector<cplx> amps_;
  double residual_ = 0.0;
};

/// <a|b>, conjugate-linear in the first argument.
inline cplx inner(const FockState& a, const FockState& b) {
  a.require_same_structure(b);
  cplx s = 0.0;
  const auto& x = a.amps();
  const auto& y = b.amps();
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

/// |<a|b>|^2 with both arguments normalised first.
inline double fidelity(const FockState& a, const FockState& b) {
  const double na = a.norm_sq();
  const double nb = b.norm_sq();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorCode::zero_norm, "fidelity of a zero state");
  const double f = std::norm(inner(a, b)) / (na * nb);
  return std::clamp(f, 0.0, 1.0);
}

/// Truncated coherent-state amplitudes e^{-|a|^2/2} a^n / sqrt(n!) for n < dim
/// (not renormalised).
inline std::vector<cplx> coherent_amplitudes(cplx amplitude, std::size_t dim) {
  std::vector<cplx> amps(dim);
  if (dim == 0) return amps;
  amps[0] = std::exp(-0.5 * std::norm(amplitude));
  for (std::size_t n = 1; n < dim; ++n) amps[n] = amps[n - 1] * amplitude / std::sqrt(static_cast<double>(n));
  return amps;
}

inline void require_cutoff(cplx amplitude, const TruncationPolicy& policy) {
  const double mean = std::norm(amplitude);
  if (policy.dim < 2 || !policy.covers(mean)) {
    throw Error(ErrorCode::cutoff_too_small,
                "dim " + std::to_string(policy.dim) + " leaves Poisson tail >= bound for |amplitude|^2 = " +
                    std::to_string(mean));
  }
}

/// Coherent state |amplitude>, renormalised after truncation; the neglected
/// Poisson weight is carried as the state's truncation residual.
inline FockState coherent_state(cplx amplitude, const TruncationPolicy& policy, std::string label = "0") {
  require_cutoff(amplitude, policy);
  auto amps = coherent_amplitudes(amplitude, policy.dim);
  const double residual = poisson_tail(std::norm(amplitude), policy.dim);
  FockState raw({std::move(label)}, {policy.dim}, std::move(amps), residual);
  return raw.normalized();
}

enum class Parity { even, odd };

inline const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

/// Normalised (|a> + |-a>) or (|a> - |-a>); built from the parity-filtered
/// coherent amplitudes so small amplitudes do not suffer cancellation.
inline FockState cat_state(cplx amplitude, Parity parity, const TruncationPolicy& policy, std::string label = "0") {
  if (parity == Parity::odd && std::abs(amplitude) == 0.0) {
    throw Error(ErrorCode::degenerate_odd_cat, "odd cat with zero amplitude has no normalisation");
  }
  require_cutoff(amplitude, policy);
  auto amps = coherent_amplitudes(amplitude, policy.dim);
  const std::size_t keep = parity == Parity::even ? 0 : 1;
  for (std::size_t n = 0; n < amps.size(); ++n) {
    if (n % 2 != keep) amps[n] = 0.0;
  }
  FockState raw({std::move(label)}, {policy.dim}, std::move(amps), poisson_tail(std::norm(amplitude), policy.dim));
  if (!(raw.norm_sq() > 0.0)) throw Error(ErrorCode::degenerate_odd_cat, "cat amplitude underflows");
  return raw.normalized();
}

/// Non-zero-even state: the even cat with its vacuum component removed.
inline FockState nze_state(cplx amplitude, const TruncationPolicy& policy, std::string label = "0") {
  if (std::abs(amplitude) == 0.0) {
    throw Error(ErrorCode::degenerate_amplitude, "NZE state needs a non-zero amplitude");
  }
  require_cutoff(amplitude, policy);
  auto amps = coherent_amplitudes(amplitude, policy.dim);
  for (std::size_t n = 0; n < amps.size(); ++n) {
    if (n == 0 || n % 2 == 1) amps[n] = 0.0;
  }
  FockState raw({std::move(label)}, {policy.dim}, std::move(amps), poisson_tail(std::norm(amplitude), policy.dim));
  if (!(raw.norm_sq() > 0.0)) throw Error(ErrorCode::degenerate_amplitude, "NZE amplitude underflows");
  return raw.normalized();
}

/// Kronecker product; labels must be disjoint.
inline FockState tensor(std::span<const FockState> states) {
  if (states.empty()) throw Error(ErrorCode::invalid_input, "tensor of nothing");
  std::vector<std::string> labels;
  std::vector<std::size_t> dims;
  std::vector<cplx> amps{1.0};
  double residual = 0.0;
  for (const auto& s : states) {
    for (std::size_t i = 0; i < s.num_modes(); ++i) {
      if (std::find(labels.begin(), labels.end(), s.labels()[i]) != labels.end()) {
        throw Error(ErrorCode::label_clash, "mode " + s.labels()[i] + " appears twice in tensor");
      }
      labels.push_back(s.labels()[i]);
      dims.push_back(s.dims()[i]);
    }
    std::vector<cplx> next(amps.size() * s.size());
    for (std::size_t i = 0; i < amps.size(); ++i) {
      for (std::size_t j = 0; j < s.size(); ++j) next[i * s.size() + j] = amps[i] * s.amps()[j];
    }
    amps = std::move(next);
    residual += s.truncation_residual();
  }
  return FockState(std::move(labels), std::move(dims), std::move(amps), residual);
}

inline FockState tensor(std::initializer_list<FockState> states) {
  std::vector<FockState> v(states);
  return tensor(std::span<const FockState>(v));
}

namespace detail {

/// Generates the photon-number blocks of the 50:50 splitter
/// U a† U† = (c† + d†)/sqrt2, U b† U† = (c† - d†)/sqrt2, one total photon
/// number N at a time. Entry (k, n) of block N is <k, N-k| U |n, N-n>.
class SplitterBlocks {
 public:
  SplitterBlocks() : n_(0), block_{1.0} {}

  std::size_t total() const { return n_; }
  double operator()(std::size_t k, std::size_t n) const { return block_[k * (n_ + 1) + n]; }
  const std::vector<double>& raw() const { return block_; }

  void advance() {
    const std::size_t N = n_ + 1;
    const std::size_t w = N + 1;
    std::vector<double> next(w * w, 0.0);
    auto prev = [&](std::size_t k, std::size_t n) -> double {
      return (k <= n_ && n <= n_) ? block_[k * (n_ + 1) + n] : 0.0;
    };
    // N D^N = sqrt(n/2) (c†+d†) D^{N-1}[., n-1] + sqrt(m/2) (c†-d†) D^{N-1}[., n]:
    // both creation paths averaged, which keeps rounding error from growing
    // with N (a one-sided recursion loses ~1e-8 by N = 180).
    const double invN = 1.0 / static_cast<double>(N);
    for (std::size_t n = 0; n <= N; ++n) {
      const std::size_t m = N - n;
      const double wa = std::sqrt(0.5 * static_cast<double>(n));
      const double wb = std::sqrt(0.5 * static_cast<double>(m));
      for (std::size_t k = 0; k <= N; ++k) {
        const double ck = k >= 1 ? std::sqrt(static_cast<double>(k)) : 0.0;
        const double dk = N - k >= 1 ? std::sqrt(static_cast<double>(N - k)) : 0.0;
        double v = 0.0;
        if (n >= 1) v += wa * (ck * (k >= 1 ? prev(k - 1, n - 1) : 0.0) + dk * prev(k, n - 1));
        if (m >= 1) v += wb * (ck * (k >= 1 ? prev(k - 1, n) : 0.0) - dk * prev(k, n));
        next[k * w + n] = v * invN;
      }
    }
    block_ = std::move(next);
    n_ = N;
  }

 private:
  std::size_t n_;
  std::vector<double> block_;
};

}  // namespace detail

/// Symmetric splitter with the coherent-label action
/// |a, b> -> |(a+b)/sqrt2, (a-b)/sqrt2>. Output modes replace the inputs in
/// place and may be renamed.
inline FockState beamsplitter(const FockState& state, const std::string& mode_a, const std::string& mode_b,
                              const std::string& out_a = {}, const std::string& out_b = {}) {
  const std::size_t ma = state.mode_index(mode_a);
  const std::size_t mb = state.mode_index(mode_b);
  if (ma == mb) throw Error(ErrorCode::invalid_input, "beam splitter needs two distinct modes");
  const std::size_t d = state.dims()[ma];
  if (state.dims()[mb] != d) throw Error(ErrorCode::dimension_mismatch, "beam splitter modes differ in dimension");

  const std::size_t sa = state.stride(ma);
  const std::size_t sb = state.stride(mb);
  const auto bases = state.base_offsets(ma, mb);
  const auto& in = state.amps();
  std::vector<cplx> out(in.size(), 0.0);

  detail::SplitterBlocks blocks;
  std::vector<cplx> column;
  for (std::size_t N = 0; N + 1 < 2 * d; ++N) {
    if (N > 0) blocks.advance();
    const std::size_t lo = N >= d ? N - d + 1 : 0;
    const std::size_t hi = std::min(N, d - 1);
    column.assign(hi - lo + 1, 0.0);
    for (std::size_t base : bases) {
      bool any = false;
      for (std::size_t n = lo; n <= hi; ++n) {
        column[n - lo] = in[base + n * sa + (N - n) * sb];
        any = any || column[n - lo] != 0.0;
      }
      if (!any) continue;
      for (std::size_t k = lo; k <= hi; ++k) {
        cplx acc = 0.0;
        for (std::size_t n = lo; n <= hi; ++n) acc += blocks(k, n) * column[n - lo];
        out[base + k * sa + (N - k) * sb] = acc;
      }
    }
  }

  auto labels = state.labels();
  if (!out_a.empty()) labels[ma] = out_a;
  if (!out_b.empty()) labels[mb] = out_b;
  return FockState(std::move(labels), state.dims(), std::move(out), state.truncation_residual());
}

/// Photon-counting outcome classes: vacuum, non-zero even, odd.
enum class PhotonClass { zero, nze, odd };

inline const char* to_string(PhotonClass c) {
  switch (c) {
    case PhotonClass::zero: return "0";
    case PhotonClass::nze: return "NZE";
    case PhotonClass::odd: return "ODD";
  }
  return "?";
}

inline bool in_class(std::size_t n, PhotonClass c) {
  switch (c) {
    case PhotonClass::zero: return n == 0;
    case PhotonClass::nze: return n != 0 && n % 2 == 0;
    case PhotonClass::odd: return n % 2 == 1;
  }
  return false;
}

inline constexpr double kMinRenormProbability = 1e-14;

struct ClassMeasurement {
  double probability = 0.0;
  /// Empty when the outcome is too improbable to renormalise.
  std::optional<FockState> collapsed;
};

inline ClassMeasurement measure_photon_class(const FockState& state, const std::string& mode, PhotonClass cls) {
  const double total = state.norm_sq();
  if (!(total > 0.0)) throw Error(ErrorCode::zero_norm, "measurement on a zero state");
  FockState proj = state.projected(mode, [cls](std::size_t n) { return in_class(n, cls); });
  ClassMeasurement m;
  m.probability = proj.norm_sq() / total;
  if (m.probability >= kMinRenormProbability) m.collapsed = proj.normalized();
  return m;
}

/// Single-mode state of `mode` taken from the heaviest conditional slice
/// of the other modes, plus <b|rho|b> for the reduced density matrix rho of
/// that mode (1 exactly when the mode factorises out in a pure state).
struct ModeExtraction {
  FockState state;
  double purity = 0.0;
};

inline ModeExtraction principal_mode_state(const FockState& s, const std::string& mode) {
  const std::size_t m = s.mode_index(mode);
  const std::size_t d = s.dims()[m];
  const std::size_t inner = s.stride(m);
  const std::size_t outer = s.size() / (d * inner);
  const auto& a = s.amps();
  auto slice_at = [&](std::size_t o, std::size_t i, std::size_t n) { return a[(o * d + n) * inner + i]; };
  double best = -1.0;
  std::size_t bo = 0;
  std::size_t bi = 0;
  double total = 0.0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      double w = 0.0;
      for (std::size_t n = 0; n < d; ++n) w += std::norm(slice_at(o, i, n));
      total += w;
      if (w > best) {
        best = w;
        bo = o;
        bi = i;
      }
    }
  }
  if (!(total > 0.0)) throw Error(ErrorCode::zero_norm, "cannot extract a mode from a zero state");
  std::vector<cplx> v(d);
  for (std::size_t n = 0; n < d; ++n) v[n] = slice_at(bo, bi, n);
  FockState b = FockState({mode}, {d}, std::move(v), s.truncation_residual()).normalized();
  double captured = 0.0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      cplx ov = 0.0;
      for (std::size_t n = 0; n < d; ++n) ov += std::conj(b.amps()[n]) * slice_at(o, i, n);
      captured += std::norm(ov);
    }
  }
  return {std::move(b), captured / total};
}

/// Fidelity of a single-mode state with a reference single-mode state built
/// on any label and cutoff; both are brought to a common label and dim.
inline double mode_fidelity(const FockState& state, const FockState& reference) {
  if (state.num_modes() != 1 || reference.num_modes() != 1) {
    throw Error(ErrorCode::invalid_input, "mode_fidelity compares single-mode states");
  }
  const std::string& label = state.labels()[0];
  const std::size_t d = std::max(state.dims()[0], reference.dims()[0]);
  const FockState a = state.resized(label, d);
  const FockState b = reference.relabeled(reference.labels()[0], label).resized(label, d);
  return fidelity(a, b);
}

/// Two-level atom; as a mode it has dim 2 with level 0 = |l>, 1 = |u>.
struct AtomState {
  cplx amp_l = 1.0;
  cplx amp_u = 0.0;

  static AtomState ground() { return {1.0, 0.0}; }
  static AtomState excited() { return {0.0, 1.0}; }

  FockState as_mode(std::string label) const {
    return FockState({std::move(label)}, {2}, {amp_l, amp_u});
  }
};

}  // namespace ecst
