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

#include "cstarphase/transport.hpp"

#include <cmath>
#include <stdexcept>

namespace cstar {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Lagrange cubic through up to four neighbouring waypoints, in index units.
RealVector cubic_waypoint(const std::vector<RealVector>& xs, double t) {
  const int n = static_cast<int>(xs.size());
  if (n == 1) return xs[0];
  int span = std::min(4, n);
  int k = static_cast<int>(std::floor(t));
  if (k < 0) k = 0;
  if (k > n - 2) k = n - 2;
  int i0 = k - 1;
  if (i0 < 0) i0 = 0;
  if (i0 > n - span) i0 = n - span;
  RealVector acc = RealVector::Zero(xs[0].size());
  for (int i = 0; i < span; ++i) {
    double w = 1.0;
    for (int j = 0; j < span; ++j) {
      if (j == i) continue;
      w *= (t - (i0 + j)) / static_cast<double>(i - j);
    }
    acc += w * xs[i0 + i];
  }
  return acc;
}

}  // namespace

double ParameterPath::dt() const {
  if (ts.size() < 2) throw std::invalid_argument("path too short");
  return (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
}

void ParameterPath::validate() const {
  if (ts.size() < 2 || ts.size() != xs.size()) throw std::invalid_argument("path too short");
  if (std::abs(ts.front()) > 1e-12) throw std::invalid_argument("path too short");
  for (size_t k = 1; k < ts.size(); ++k) {
    if (!(ts[k] > ts[k - 1])) throw std::invalid_argument("path too short");
  }
}

RealVector ParameterPath::at(double t) const {
  return cubic_waypoint(xs, t / dt());
}

RealVector ParameterPath::velocity(int k) const {
  const int n = size();
  if (n < 3) throw std::invalid_argument("path too short");
  const double inv2h = 1.0 / (2.0 * dt());
  if (n < 5) {
    if (k == 0) return (-3.0 * xs[0] + 4.0 * xs[1] - xs[2]) * inv2h;
    if (k == n - 1) {
      return (3.0 * xs[n - 1] - 4.0 * xs[n - 2] + xs[n - 3]) * inv2h;
    }
    return (xs[k + 1] - xs[k - 1]) * inv2h;
  }
  const double inv12h = 1.0 / (12.0 * dt());
  if (k == 0) {
    return (-25.0 * xs[0] + 48.0 * xs[1] - 36.0 * xs[2] + 16.0 * xs[3] -
            3.0 * xs[4]) *
           inv12h;
  }
  if (k == 1) {
    return (-3.0 * xs[0] - 10.0 * xs[1] + 18.0 * xs[2] - 6.0 * xs[3] +
            xs[4]) *
           inv12h;
  }
  if (k == n - 2) {
    return (3.0 * xs[n - 1] + 10.0 * xs[n - 2] - 18.0 * xs[n - 3] +
            6.0 * xs[n - 4] - xs[n - 5]) *
           inv12h;
  }
  if (k == n - 1) {
    return (25.0 * xs[n - 1] - 48.0 * xs[n - 2] + 36.0 * xs[n - 3] -
            16.0 * xs[n - 4] + 3.0 * xs[n - 5]) *
           inv12h;
  }
  return (xs[k - 2] - 8.0 * xs[k - 1] + 8.0 * xs[k + 1] - xs[k + 2]) *
         inv12h;
}

ParameterPath circle_path(const RealVector& center, double radius, int axis_a,
                          int axis_b, double duration, int n_samples, bool clockwise) {
  if (n_samples < 2) throw std::invalid_argument("path too short");
  ParameterPath path;
  path.ts.resize(n_samples);
  path.xs.resize(n_samples);
  const double sign = clockwise ? -1.0 : 1.0;
  for (int k = 0; k < n_samples; ++k) {
    const double t = duration * static_cast<double>(k) / static_cast<double>(n_samples - 1);
    const double theta = sign * 2.0 * kPi * t / duration;
    RealVector x = center;
    x(axis_a) += radius * std::cos(theta) - radius;  // start at the center offset
    x(axis_b) += radius * std::sin(theta);
    path.ts[k] = t;
    path.xs[k] = x;
  }
  return path;
}

ParameterPath segment_path(const RealVector& x0, const RealVector& x1,
                           double duration, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("path too short");
  ParameterPath path;
  path.ts.resize(n_samples);
  path.xs.resize(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(n_samples - 1);
    path.ts[k] = duration * u;
    path.xs[k] = (1.0 - u) * x0 + u * x1;
  }
  return path;
}

ParameterPath stationary_path(const RealVector& x0, double duration, int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("path too short");
  ParameterPath path;
  path.ts.resize(n_samples);
  path.xs.assign(n_samples, x0);
  for (int k = 0; k < n_samples; ++k) {
    path.ts[k] = duration * static_cast<double>(k) / static_cast<double>(n_samples - 1);
  }
  return path;
}

std::vector<BipartiteVector> schrodinger_integrate(const MatFamily& h,
                                                   const BipartiteVector& psi0,
                                                   const ParameterPath& path,
                                                   double hbar, int substeps) {
  path.validate();
  if (substeps < 1) substeps = 1;
  const double node_dt = path.dt();
  const double step = node_dt / static_cast<double>(substeps);
  const Complex mi_over_h = Complex(0.0, -1.0) / hbar;

  std::vector<BipartiteVector> out;
  out.reserve(path.size());
  ComplexVector psi = psi0.amp;
  out.push_back(psi0);
  auto rhs = [&](double t, const ComplexVector& y) -> ComplexVector {
    return mi_over_h * (h(path.at(t)) * y);
  };
  for (int k = 0; k + 1 < path.size(); ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double t = path.ts[k] + step * static_cast<double>(s);
      const ComplexVector k1 = rhs(t, psi);
      const ComplexVector k2 = rhs(t + 0.5 * step, psi + 0.5 * step * k1);
      const ComplexVector k3 = rhs(t + 0.5 * step, psi + 0.5 * step * k2);
      const ComplexVector k4 = rhs(t + step, psi + step * k3);
      psi += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (std::abs(psi.norm() - 1.0) > 1e-6) throw std::runtime_error("refine N");
    out.emplace_back(psi0.n_s, psi0.n_e, psi);
  }
  return out;
}

ComplexMatrix time_ordered_exp(const std::vector<ComplexMatrix>& e_samples,
                               double dt, double hbar, int substeps) {
  std::vector<ComplexMatrix> w(e_samples.size());
  const Complex i_over_h = Complex(0.0, 1.0) / hbar;
  for (size_t k = 0; k < e_samples.size(); ++k) w[k] = i_over_h * e_samples[k];
  return path_ordered_exp(w, dt, substeps);
}

std::vector<ComplexMatrix> ordered_exp_right_series(
    const std::vector<ComplexMatrix>& w_samples, double dt, int substeps) {
  const int n = static_cast<int>(w_samples.size());
  if (n < 2) throw std::invalid_argument("path too short");
  if (substeps < 1) substeps = 1;
  const double step = dt / static_cast<double>(substeps);
  const auto dim = w_samples[0].rows();
  ComplexMatrix g = ComplexMatrix::Identity(dim, dim);
  std::vector<ComplexMatrix> out;
  out.reserve(n);
  out.push_back(g);
  auto rhs = [&](double idx, const ComplexMatrix& y) -> ComplexMatrix {
    return -y * cubic_sample(w_samples, idx);
  };
  const double didx = 1.0 / static_cast<double>(substeps);
  for (int k = 0; k + 1 < n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double idx = static_cast<double>(k) + didx * static_cast<double>(s);
      const ComplexMatrix k1 = rhs(idx, g);
      const ComplexMatrix k2 = rhs(idx + 0.5 * didx, g + 0.5 * step * k1);
      const ComplexMatrix k3 = rhs(idx + 0.5 * didx, g + 0.5 * step * k2);
      const ComplexMatrix k4 = rhs(idx + didx, g + step * k3);
      g += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.push_back(g);
  }
  return out;
}

ComplexMatrix ordered_exp_right(const std::vector<ComplexMatrix>& w_samples,
                                double dt, int substeps) {
  return ordered_exp_right_series(w_samples, dt, substeps).back();
}

PathSection build_path_section(const MatFamily& h, const MatFamily& e0,
                               const BranchSelector& sel, const ParameterPath& path,
                               int n_s, int n_e) {
  path.validate();
  PathSection sec;
  sec.path = path;
  BranchTracker tracker(h, e0, n_s, n_e, sel);
  sec.recs.reserve(path.size());
  for (int k = 0; k < path.size(); ++k) sec.recs.push_back(tracker.record_at(path.xs[k]));
  return sec;
}

std::vector<ComplexMatrix> pullback_full_generator(const PathSection& sec,
                                                   const GeneratorOptions& opts) {
  const int n = static_cast<int>(sec.recs.size());
  std::vector<ComplexVector> amps(n);
  for (int k = 0; k < n; ++k) amps[k] = sec.recs[k].phi.amp;
  const auto damps = series_derivative(amps, sec.path.dt());
  std::vector<ComplexMatrix> out(n);
  for (int k = 0; k < n; ++k) {
    const EigenRecord& rec = sec.recs[k];
    const BipartiteVector dphi(rec.phi.n_s, rec.phi.n_e, damps[k]);
    out[k] = solve_generator_equation(star_inner(rec.phi, dphi), rec.rho, opts);
  }
  return out;
}

PullbackSplit pullback_split_generator(const PathSection& sec, const MatFamily& h,
                                       const GeneratorOptions& opts) {
  const int n = static_cast<int>(sec.recs.size());
  std::vector<ComplexVector> amps(n);
  for (int k = 0; k < n; ++k) amps[k] = sec.recs[k].phi.amp;
  const auto damps = series_derivative(amps, sec.path.dt());
  PullbackSplit out;
  out.reduced.resize(n);
  out.remainder.resize(n);
  for (int k = 0; k < n; ++k) {
    const EigenRecord& rec = sec.recs[k];
    const ComplexMatrix p =
        eigenspace_projector(h(rec.x), rec.e0, rec.lambda, rec.phi.n_s, rec.phi.n_e);
    const ComplexVector tangent = p * damps[k];
    const BipartiteVector dpar(rec.phi.n_s, rec.phi.n_e, tangent);
    const BipartiteVector dperp(rec.phi.n_s, rec.phi.n_e, ComplexVector(damps[k] - tangent));
    out.reduced[k] = solve_generator_equation(star_inner(rec.phi, dpar), rec.rho, opts);
    out.remainder[k] = solve_generator_equation(star_inner(rec.phi, dperp), rec.rho, opts);
  }
  return out;
}

TransportResult adiabatic_transport(const PathSection& sec,
                                    const std::vector<ComplexMatrix>& a_pullback,
                                    const std::vector<ComplexMatrix>* eta_pullback,
                                    double hbar, int substeps) {
  const int n = static_cast<int>(sec.recs.size());
  if (n < 2 || static_cast<int>(a_pullback.size()) != n) {
    throw std::invalid_argument("time-grid mismatch");
  }
  if (eta_pullback != nullptr && static_cast<int>(eta_pullback->size()) != n) {
    throw std::invalid_argument("time-grid mismatch");
  }
  if (substeps < 1) substeps = 1;
  std::vector<ComplexMatrix> w(a_pullback);
  if (eta_pullback != nullptr) {
    for (int k = 0; k < n; ++k) w[k] += (*eta_pullback)[k];
  }
  std::vector<ComplexMatrix> e_samples(n);
  for (int k = 0; k < n; ++k) e_samples[k] = sec.recs[k].e;

  const double node_dt = sec.path.dt();
  const double step = node_dt / static_cast<double>(substeps);
  const double didx = 1.0 / static_cast<double>(substeps);
  const Complex mi_over_h = Complex(0.0, -1.0) / hbar;
  const auto dim = e_samples[0].rows();

  TransportResult res;
  res.ts = sec.path.ts;
  res.g.reserve(n);
  ComplexMatrix g = ComplexMatrix::Identity(dim, dim);
  res.g.push_back(g);
  auto rhs = [&](double idx, const ComplexMatrix& y) -> ComplexMatrix {
    return mi_over_h * (cubic_sample(e_samples, idx) * y) - y * cubic_sample(w, idx);
  };
  for (int k = 0; k + 1 < n; ++k) {
    for (int s = 0; s < substeps; ++s) {
      const double idx = static_cast<double>(k) + didx * static_cast<double>(s);
      const ComplexMatrix k1 = rhs(idx, g);
      const ComplexMatrix k2 = rhs(idx + 0.5 * didx, g + 0.5 * step * k1);
      const ComplexMatrix k3 = rhs(idx + 0.5 * didx, g + 0.5 * step * k2);
      const ComplexMatrix k4 = rhs(idx + didx, g + step * k3);
      g += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    res.g.push_back(g);
  }
  res.rho.resize(n);
  res.trace_residual.resize(n);
  for (int k = 0; k < n; ++k) {
    res.rho[k] = res.g[k] * sec.recs[k].rho * res.g[k].adjoint();
    res.trace_residual[k] = std::abs(res.rho[k].trace() - Complex(1.0, 0.0));
  }
  return res;
}

std::pair<std::vector<double>, double> adiabaticity_diagnostic(
    const std::vector<ComplexMatrix>& r_pullback) {
  std::vector<double> series(r_pullback.size());
  double worst = 0.0;
  for (size_t k = 0; k < r_pullback.size(); ++k) {
    series[k] = op_norm(r_pullback[k]);
    worst = std::max(worst, series[k]);
  }
  return {series, worst};
}

std::vector<double> leakage_series(const std::vector<BipartiteVector>& psis,
                                   const PathSection& sec, const MatFamily& h,
                                   double deg_tol) {
  if (psis.size() != sec.recs.size()) throw std::invalid_argument("time-grid mismatch");
  std::vector<double> out(psis.size());
  for (size_t k = 0; k < psis.size(); ++k) {
    const EigenRecord& rec = sec.recs[k];
    const ComplexMatrix p = eigenspace_projector(h(rec.x), rec.e0, rec.lambda,
                                                 rec.phi.n_s, rec.phi.n_e, deg_tol);
    const double inside = std::real(psis[k].amp.dot(p * psis[k].amp));
    out[k] = std::max(0.0, 1.0 - inside);
  }
  return out;
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
      ComplexMatrix(0.5 * ((a - b) + (a - b).adjoint())));
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ComplexMatrix(0.5 * (m + m.adjoint())));
  RealVector v = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * v.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

TransportError transport_error(const std::vector<BipartiteVector>& exact_psis,
                               const TransportResult& transported) {
  if (exact_psis.size() != transported.rho.size()) {
    throw std::invalid_argument("time-grid mismatch");
  }
  TransportError err;
  err.trace_distance.resize(exact_psis.size());
  for (size_t k = 0; k < exact_psis.size(); ++k) {
    const ComplexMatrix rho_exact = star_inner(exact_psis[k], exact_psis[k]);
    err.trace_distance[k] = trace_distance(rho_exact, transported.rho[k]);
    err.max_trace_distance = std::max(err.max_trace_distance, err.trace_distance[k]);
  }
  const ComplexMatrix rho_exact =
      star_inner(exact_psis.back(), exact_psis.back());
  const ComplexMatrix root = psd_sqrt(rho_exact);
  const ComplexMatrix inner = psd_sqrt(root * transported.rho.back() * root);
  const double tr = std::real(inner.trace());
  err.final_fidelity = tr * tr;
  return err;
}

double parallel_transport_check(const std::vector<ComplexMatrix>& w_samples,
                                const std::vector<ComplexMatrix>& rho_samples,
                                double dt, int substeps) {
  if (w_samples.size() != rho_samples.size()) throw std::invalid_argument("time-grid mismatch");
  const auto gs = ordered_exp_right_series(w_samples, dt, substeps);
  std::vector<ComplexMatrix> sigma(gs.size());
  for (size_t k = 0; k < gs.size(); ++k) sigma[k] = gs[k] * rho_samples[k] * gs[k].adjoint();
  const auto dsigma = series_derivative(sigma, dt);
  double worst = 0.0;
  for (const auto& d : dsigma) worst = std::max(worst, d.norm());
  return worst;
}

}  // namespace cstar
