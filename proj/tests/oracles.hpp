/*
 Copyright 2026 The smhe Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef SMHE_TESTS_ORACLES_HPP
#define SMHE_TESTS_ORACLES_HPP

// Independent reference computations used only by the tests. Nothing here
// calls into the code paths it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Reactor drift written out longhand.
inline Vec reactor_drift(const Vec& x) {
  Vec d(2);
  d[0] = -2.0 * 0.16 * x[0] * x[0] + 2.0 * 0.64 * x[1];
  d[1] = 0.16 * x[0] * x[0] - 0.64 * x[1];
  return d;
}

// Explicit Euler with a tiny step over [0, duration].
inline Vec fine_euler(const std::function<Vec(const Vec&)>& drift, Vec x, double duration, double h) {
  const long steps = std::lround(duration / h);
  for (long k = 0; k < steps; ++k) x += h * drift(x);
  return x;
}

// Literal geometric sums behind the horizon factors.
inline double rho_bar_1_sum(double rho, double a, int N) {
  // sum_{i=t-N}^{t-1} (rho^a)^i / rho^(a t)  ==  sum_{k=1}^{N} rho^(-a k)
  double s = 0.0;
  for (int k = 1; k <= N; ++k) s += std::pow(rho, -a * k);
  return s;
}

inline double rho_bar_2_sum(double rho, double a, int N) {
  double s = 0.0;
  for (int j = 1; j <= N; ++j) s += std::pow(std::pow(rho, a), j - N);
  return s;
}

// Central finite-difference gradient.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Weighted least squares for a linear window x+ = A x + w, y = C x + nu with
// cost (chi0 - prior)'P(chi0 - prior) + sum w'Ww + nu'Vnu, solved by explicit
// normal equations over the stacked decision vector [chi0; w_0; ...; w_{M-1}].
inline Vec linear_window_wls(const Mat& A, const Mat& C, const Mat& P, const Mat& W, const Mat& V,
                             const Vec& prior, const std::vector<Vec>& ys) {
  const Eigen::Index n = A.rows();
  const Eigen::Index M = static_cast<Eigen::Index>(ys.size());
  const Eigen::Index dim = n * (M + 1);
  Mat H = Mat::Zero(dim, dim);
  Vec b = Vec::Zero(dim);
  H.topLeftCorner(n, n) += P;
  b.head(n) += P * prior;
  for (Eigen::Index i = 0; i < M; ++i) H.block(n * (i + 1), n * (i + 1), n, n) += W;
  for (Eigen::Index i = 0; i < M; ++i) {
    // Phi_i maps the decision vector to chi_i.
    Mat phi = Mat::Zero(n, dim);
    Mat Ap = Mat::Identity(n, n);
    for (Eigen::Index k = 0; k < i; ++k) Ap = A * Ap;
    phi.leftCols(n) = Ap;
    for (Eigen::Index j = 0; j < i; ++j) {
      Mat Aj = Mat::Identity(n, n);
      for (Eigen::Index k = 0; k < i - 1 - j; ++k) Aj = A * Aj;
      phi.block(0, n * (j + 1), n, n) = Aj;
    }
    const Mat CP = C * phi;
    H += CP.transpose() * V * CP;
    b += CP.transpose() * V * ys[static_cast<std::size_t>(i)];
  }
  return H.ldlt().solve(b);
}

// Theorem constants typed in straight from the printed formulas.
struct HandConstants {
  double C1p, C2p, C3p, C1pp, C2pp, C3pp, lambda;
};

inline HandConstants theorem_by_hand(double a, int N, double eta, double rho, double cp, double cw, double cv,
                                     double Cp, double Cw, double Cv, double lp, double lw, double lv,
                                     double cbar) {
  const double r1 = rho_bar_1_sum(rho, a, N);
  const double r2 = rho_bar_2_sum(rho, a, N);
  const double lambda = eta > rho ? eta : rho;
  const double etab = eta / (1 - eta);
  const double Cpb = Cp * std::pow(3 * cbar * r1, 1 / a);
  const double Cwb = Cw / rho * std::pow(3 * cbar * r2, 1 / a);
  const double Cvb = Cv / rho * std::pow(3 * cbar * r2, 1 / a);
  const double k1 = cp * std::pow(eta, N) * std::pow(lp, -1 / a) + cw * etab * std::pow(lw, -1 / a) +
                    cv * etab * std::pow(lv, -1 / a);
  const double k2 = cp * std::pow(lp, -1 / a) + cw * etab * std::pow(lw, -1 / a) + cv * etab * std::pow(lv, -1 / a);
  const double q = cp * std::pow(eta / lambda, N);
  return {k1 * Cpb + q * Cp, k1 * Cwb + q * Cw + cw, k1 * Cvb + q * Cv + cv,
          cp + k2 * Cpb,     cw + k2 * Cwb,          cv + k2 * Cvb, lambda};
}

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace oracle

#endif  // SMHE_TESTS_ORACLES_HPP
