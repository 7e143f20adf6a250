#include "avkit/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace avkit {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct CurvaturePair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

} // namespace

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult r;
  r.x = std::move(x0);
  std::vector<double> g(n), g_new(n), x_new(n), d(n), alpha(options.memory);
  r.value = f(r.x, g);
  r.history.push_back(r.value);
  const double g0 = norm(g);
  const double threshold = options.tolerance * std::max(1.0, g0);
  r.gradient_norm = g0;
  if (g0 <= threshold) {
    r.converged = true;
    return r;
  }

  std::deque<CurvaturePair> memory;
  for (r.iterations = 0; r.iterations < options.max_iterations;) {
    // two-loop recursion: d = -H g
    std::copy(g.begin(), g.end(), d.begin());
    for (std::size_t k = memory.size(); k-- > 0;) {
      alpha[k] = memory[k].rho * dot(memory[k].s, d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * memory[k].y[i];
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const double beta = memory[k].rho * dot(memory[k].y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += memory[k].s[i] * (alpha[k] - beta);
    }
    for (auto& v : d) v = -v;

    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = -dot(g, g);
    }

    double step = memory.empty() ? std::min(1.0, 1.0 / r.gradient_norm) : 1.0;
    double value_new = 0.0;
    bool accepted = false;
    for (int trial = 0; trial < 60; ++trial) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = r.x[i] + step * d[i];
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && value_new <= r.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    CurvaturePair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = x_new[i] - r.x[i];
      pair.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * norm(pair.s) * norm(pair.y)) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > options.memory) memory.pop_front();
    }

    r.x.swap(x_new);
    g.swap(g_new);
    r.value = value_new;
    r.history.push_back(r.value);
    r.gradient_norm = norm(g);
    ++r.iterations;
    if (r.gradient_norm <= threshold) {
      r.converged = true;
      break;
    }
  }
  return r;
}

} // namespace avkit
