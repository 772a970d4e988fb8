#pragma once

// Grid points and an order-preserving parallel map over them.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ecst/error.hpp"
#include "ecst/protocol.hpp"

namespace ecst {

struct GridPoint {
  double alpha_sq = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  bool operator==(const GridPoint&) const = default;
};

/// Real alpha = sqrt(alpha_sq), information from Bloch angles.
inline InformationSpec information_at(const GridPoint& p) {
  if (!(p.alpha_sq > 0.0) || !std::isfinite(p.alpha_sq)) {
    throw Error(ErrorCode::invalid_input, "alpha_sq must be positive and finite");
  }
  return make_information_bloch(std::sqrt(p.alpha_sq), p.theta, p.phi);
}

inline std::vector<GridPoint> grid_product(const std::vector<double>& alpha_sq, const std::vector<double>& theta,
                                           const std::vector<double>& phi) {
  std::vector<GridPoint> out;
  out.reserve(alpha_sq.size() * theta.size() * phi.size());
  for (double a : alpha_sq) {
    for (double t : theta) {
      for (double p : phi) out.push_back({a, t, p});
    }
  }
  return out;
}

template <typename T>
struct Computed {
  std::optional<T> value;
  std::string error;  // set when value is empty
};

/// Applies `fn` to every item on `threads` workers; results keep input order.
/// Library errors are captured per item, anything else propagates.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, Fn fn, unsigned threads = 0) {
  using T = std::invoke_result_t<Fn, const In&>;
  std::vector<Computed<T>> out(items.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, items.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < items.size() && !failed; i = next++) {
      try {
        out[i].value = fn(items[i]);
      } catch (const Error& e) {
        out[i].error = e.what();
      } catch (...) {
        if (!failed.exchange(true)) fatal = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  return out;
}

}  // namespace ecst
