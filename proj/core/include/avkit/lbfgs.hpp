#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace avkit {

// f(x, grad) returns the objective at x and writes its gradient into grad.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

struct LbfgsOptions {
  std::size_t memory = 10;
  // Converged when ||grad|| <= tolerance * max(1, ||grad(x0)||).
  double tolerance = 1e-5;
  std::size_t max_iterations = 1000;
  double armijo = 1e-4;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Objective after each accepted step, starting with f(x0).
  std::vector<double> history;
};

// Limited-memory BFGS with backtracking Armijo line search; every accepted
// step is a descent step, so history is non-increasing.
LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsOptions& options);

} // namespace avkit
