#include "lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace snse::detail {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, std::vector<double>& x, const LbfgsOptions& options) {
  const std::size_t n = x.size();
  LbfgsResult res;
  std::vector<double> g(n), d(n), x_new(n), g_new(n);
  double fx = f(x, g);
  res.evaluations = 1;
  const double g0 = std::sqrt(dot(g, g));
  res.value = fx;
  res.gradient_norm = g0;
  if (g0 == 0.0) {
    res.status = "converged";
    return res;
  }
  std::deque<Pair> history;
  std::vector<double> alpha(options.memory);
  int stalls = 0;

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    // two-loop recursion
    d = g;
    for (std::size_t k = history.size(); k-- > 0;) {
      alpha[k] = history[k].rho * dot(history[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * history[k].y[i];
    }
    double gamma = 1.0;
    if (!history.empty()) gamma = dot(history.back().s, history.back().y) / dot(history.back().y, history.back().y);
    else gamma = 1.0 / std::sqrt(dot(g, g));
    for (auto& v : d) v *= gamma;
    for (std::size_t k = 0; k < history.size(); ++k) {
      const double beta = history[k].rho * dot(history[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * history[k].s[i];
    }
    for (auto& v : d) v = -v;
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      history.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = -dot(g, g);
    }

    double step = 1.0, f_new = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 40; ++trial) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      // minimizer of the quadratic through f(0), f'(0), f(step)
      double next = std::isfinite(f_new) ? -slope * step * step / (2.0 * (f_new - fx - slope * step)) : 0.1 * step;
      step = std::clamp(next, 0.1 * step, 0.5 * step);
    }
    if (!accepted) {
      res.status = "line search failed";
      break;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-300) {
      p.rho = 1.0 / sy;
      history.push_back(std::move(p));
      if (history.size() > options.memory) history.pop_front();
    }
    const double decrease = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    res.value = fx;
    res.gradient_norm = std::sqrt(dot(g, g));
    if (res.gradient_norm <= options.gradient_tol * g0) {
      ++res.iterations;
      res.status = "converged";
      return res;
    }
    stalls = decrease <= 1e-16 * std::abs(fx) ? stalls + 1 : 0;
    if (stalls >= 3) {
      ++res.iterations;
      res.status = "stalled";
      return res;
    }
  }
  if (res.status.empty()) res.status = "iteration limit";
  return res;
}

}  // namespace snse::detail
