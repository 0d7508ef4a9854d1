// Copyright 2026 the cstarphase authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cstarphase/closed_baseline.hpp"

#include <cmath>
#include <stdexcept>

namespace cstar {

namespace {

template <typename T>
std::vector<T> series_derivative_impl(const std::vector<T>& ys, double dt) {
  const int n = static_cast<int>(ys.size());
  if (n < 3) throw std::invalid_argument("path too short");
  std::vector<T> dys(n);
  const double inv2h = 1.0 / (2.0 * dt);
  dys[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) * inv2h;
  for (int k = 1; k + 1 < n; ++k) dys[k] = (ys[k + 1] - ys[k - 1]) * inv2h;
  dys[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) * inv2h;
  return dys;
}

void require_samples(const VectorSection& sec) {
  if (sec.size() < 3) throw std::invalid_argument("path too short");
  if (sec.ts.size() != sec.phis.size()) throw std::invalid_argument("path too short");
}

}  // namespace

std::vector<ComplexVector> series_derivative(const std::vector<ComplexVector>& ys, double dt) {
  return series_derivative_impl(ys, dt);
}

std::vector<ComplexMatrix> series_derivative(const std::vector<ComplexMatrix>& ys, double dt) {
  return series_derivative_impl(ys, dt);
}

double VectorSection::dt() const {
  if (ts.size() < 2) throw std::invalid_argument("path too short");
  return (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
}

std::vector<Complex> berry_connection(const VectorSection& sec) {
  require_samples(sec);
  const auto dphis = series_derivative(sec.phis, sec.dt());
  std::vector<Complex> a(sec.phis.size());
  for (size_t k = 0; k < sec.phis.size(); ++k) a[k] = sec.phis[k].dot(dphis[k]);
  return a;
}

DissipativeConnection dissipative_generator(const VectorSection& sec) {
  require_samples(sec);
  const auto dphis = series_derivative(sec.phis, sec.dt());
  DissipativeConnection out;
  out.a.resize(sec.phis.size());
  out.re_a.resize(sec.phis.size());
  for (size_t k = 0; k < sec.phis.size(); ++k) {
    const double nsq = sec.phis[k].squaredNorm();
    if (!(nsq > 0.0)) throw std::invalid_argument("degenerate section");
    out.a[k] = sec.phis[k].dot(dphis[k]) / nsq;
    out.re_a[k] = out.a[k].real();
  }
  return out;
}

Complex integrate_samples(const std::vector<Complex>& ys, double dt) {
  if (ys.size() < 2) throw std::invalid_argument("path too short");
  Complex acc = 0.5 * (ys.front() + ys.back());
  for (size_t k = 1; k + 1 < ys.size(); ++k) acc += ys[k];
  return acc * dt;
}

double integrate_samples(const std::vector<double>& ys, double dt) {
  if (ys.size() < 2) throw std::invalid_argument("path too short");
  double acc = 0.5 * (ys.front() + ys.back());
  for (size_t k = 1; k + 1 < ys.size(); ++k) acc += ys[k];
  return acc * dt;
}

ComplexMatrix cubic_sample(const std::vector<ComplexMatrix>& samples, double t) {
  const int n = static_cast<int>(samples.size());
  if (n == 0) throw std::invalid_argument("path too short");
  if (n == 1) return samples[0];
  if (n < 4) {
    // Linear / quadratic fallback via the same Lagrange construction.
    ComplexMatrix acc = ComplexMatrix::Zero(samples[0].rows(), samples[0].cols());
    for (int i = 0; i < n; ++i) {
      double w = 1.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        w *= (t - j) / static_cast<double>(i - j);
      }
      acc += w * samples[i];
    }
    return acc;
  }
  // Four-point stencil centered on the interval containing t, clamped to the
  // sample range near the ends.
  int k = static_cast<int>(std::floor(t));
  if (k < 0) k = 0;
  if (k > n - 2) k = n - 2;
  int i0 = k - 1;
  if (i0 < 0) i0 = 0;
  if (i0 > n - 4) i0 = n - 4;
  const double u = t - i0;
  ComplexMatrix acc = ComplexMatrix::Zero(samples[0].rows(), samples[0].cols());
  for (int i = 0; i < 4; ++i) {
    double w = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      w *= (u - j) / static_cast<double>(i - j);
    }
    acc += w * samples[i0 + i];
  }
  return acc;
}

ComplexMatrix path_ordered_exp(const std::function<ComplexMatrix(double)>& w,
                               double t0, double t1, int steps) {
  if (steps < 1) throw std::invalid_argument("path too short");
  const double h = (t1 - t0) / static_cast<double>(steps);
  ComplexMatrix probe = w(t0);
  const auto dim = probe.rows();
  ComplexMatrix g = ComplexMatrix::Identity(dim, dim);
  auto rhs = [&](double t, const ComplexMatrix& y) -> ComplexMatrix { return -w(t) * y; };
  for (int s = 0; s < steps; ++s) {
    const double t = t0 + h * static_cast<double>(s);
    const ComplexMatrix k1 = rhs(t, g);
    const ComplexMatrix k2 = rhs(t + 0.5 * h, g + 0.5 * h * k1);
    const ComplexMatrix k3 = rhs(t + 0.5 * h, g + 0.5 * h * k2);
    const ComplexMatrix k4 = rhs(t + h, g + h * k3);
    g += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  ensure_finite(g, "path_ordered_exp");
  return g;
}

ComplexMatrix path_ordered_exp(const std::vector<ComplexMatrix>& w_samples,
                               double dt, int substeps) {
  const int n = static_cast<int>(w_samples.size());
  if (n < 2) throw std::invalid_argument("path too short");
  if (substeps < 1) substeps = 1;
  // Parameterize by sample index so the interpolant sees unit spacing; the
  // physical spacing enters through the step size alone.
  auto w_of = [&](double idx) -> ComplexMatrix { return cubic_sample(w_samples, idx) * dt; };
  return path_ordered_exp(w_of, 0.0, static_cast<double>(n - 1),
                          (n - 1) * substeps);
}

}  // namespace cstar
