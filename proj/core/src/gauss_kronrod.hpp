#pragma once

// Globally adaptive 7/15-point Gauss-Kronrod quadrature for small vector
// integrands. Panels are always summed in left-to-right order, so the result
// does not depend on the order in which panels were refined.

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <vector>

namespace robreg::detail {

template <std::size_t K>
using Vec = std::array<double, K>;

template <std::size_t K>
struct GkResult {
  Vec<K> value{};
  Vec<K> error{};
  int panels = 0;
  bool converged = true;
};

template <std::size_t K>
struct GkPanel {
  double a;
  double b;
  Vec<K> value;
  Vec<K> error;
  double badness;  // max over components of error / weight
};

template <std::size_t K, class F>
GkPanel<K> gk_panel(F& f, double a, double b, const Vec<K>& weight) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using gauss = boost::math::quadrature::gauss<double, 7>;
  static const auto& xk = kronrod::abscissa();
  static const auto& wk = kronrod::weights();
  static const auto& wg = gauss::weights();

  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Vec<K> kr{};
  Vec<K> ga{};
  const Vec<K> fc = f(c);
  for (std::size_t k = 0; k < K; ++k) {
    kr[k] = wk[0] * fc[k];
    ga[k] = wg[0] * fc[k];
  }
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const Vec<K> lo = f(c - h * xk[i]);
    const Vec<K> hi = f(c + h * xk[i]);
    for (std::size_t k = 0; k < K; ++k) {
      const double s = lo[k] + hi[k];
      kr[k] += wk[i] * s;
      // Gauss nodes are the even-indexed Kronrod nodes.
      if (i % 2 == 0) ga[k] += wg[i / 2] * s;
    }
  }
  GkPanel<K> p{a, b, {}, {}, 0.0};
  for (std::size_t k = 0; k < K; ++k) {
    p.value[k] = h * kr[k];
    p.error[k] = std::abs(h * (kr[k] - ga[k]));
    p.badness = std::max(p.badness, p.error[k] / weight[k]);
  }
  return p;
}

/// Integrates f over the union of [breaks[i], breaks[i+1]] until the summed
/// error of every component k is below rel_tol * weight[k] * |integral of
/// component 0|, or max_panels is reached. Component 0 must be the mass.
template <std::size_t K, class F>
GkResult<K> integrate(F&& f, std::span<const double> breaks, const Vec<K>& weight,
                      double rel_tol, int max_panels = 4000) {
  GkResult<K> out;
  if (breaks.size() < 2) return out;

  auto worse = [](const GkPanel<K>& x, const GkPanel<K>& y) {
    if (x.badness != y.badness) return x.badness < y.badness;
    return x.a > y.a;  // deterministic tie break
  };
  std::priority_queue<GkPanel<K>, std::vector<GkPanel<K>>, decltype(worse)> heap(worse);
  Vec<K> total_err{};
  double mass = 0.0;
  auto push = [&](GkPanel<K> p) {
    for (std::size_t k = 0; k < K; ++k) total_err[k] += p.error[k];
    mass += p.value[0];
    heap.push(std::move(p));
  };
  auto done = [&] {
    for (std::size_t k = 0; k < K; ++k) {
      if (!(total_err[k] <= rel_tol * weight[k] * std::abs(mass))) return false;
    }
    return true;
  };

  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) push(gk_panel<K>(f, breaks[i], breaks[i + 1], weight));
  }
  while (!heap.empty() && !done() && static_cast<int>(heap.size()) < max_panels) {
    GkPanel<K> worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // panel at floating-point resolution
    heap.pop();
    for (std::size_t k = 0; k < K; ++k) total_err[k] -= worst.error[k];
    mass -= worst.value[0];
    push(gk_panel<K>(f, worst.a, mid, weight));
    push(gk_panel<K>(f, mid, worst.b, weight));
  }
  out.converged = done();

  std::vector<GkPanel<K>> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(),
            [](const GkPanel<K>& x, const GkPanel<K>& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    for (std::size_t k = 0; k < K; ++k) {
      out.value[k] += p.value[k];
      out.error[k] += p.error[k];
    }
  }
  out.panels = static_cast<int>(panels.size());
  return out;
}

}  // namespace robreg::detail
