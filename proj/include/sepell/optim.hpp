// Copyright 2026 The sepell Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file optim.hpp
 * Limited-memory BFGS with a monotone backtracking line search.
 *
 * Every accepted iterate strictly decreases the objective, so the returned
 * value never exceeds the value at the starting point.
 */
#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace sepell {

/// Returns f(x) and writes the gradient into `grad`. May return +inf to
/// reject a point (e.g. outside the objective's domain).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int max_iters = 2000;
  int history = 10;
  /// Stop when an accepted step changes f by less than this (relative).
  double step_tolerance = 1e-13;
  /// Stop as soon as f drops below this value.
  double target = -std::numeric_limits<double>::infinity();
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline LbfgsResult minimize_lbfgs(const Objective& f, Eigen::VectorXd x, const LbfgsOptions& opt = {}) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n), g_new(n), x_new(n);
  auto eval = [&](const Eigen::VectorXd& at, Eigen::VectorXd& grad) {
    return f(std::span<const double>(at.data(), n), std::span<double>(grad.data(), n));
  };
  LbfgsResult r;
  double fx = eval(x, g);
  r.initial_value = fx;
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int stalls = 0;

  for (int it = 0; it < opt.max_iters; ++it) {
    r.iterations = it + 1;
    if (fx <= opt.target || g.squaredNorm() == 0.0) {
      r.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q *= 1.0 / std::max(1.0, g.norm());
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += s_hist[i] * (alpha[i] - beta);
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0)) {
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0, f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = eval(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope && f_new < fx) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Memory may be stale; retry once along steepest descent before giving up.
      if (!s_hist.empty() && ++stalls < 2) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      r.converged = true;
      break;
    }
    stalls = 0;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    const double change = fx - f_new;
    x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if (change <= opt.step_tolerance * std::max(std::abs(fx), 1e-300)) {
      r.converged = true;
      break;
    }
  }
  r.x = std::move(x);
  r.value = fx;
  return r;
}

}  // namespace sepell
