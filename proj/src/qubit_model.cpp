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

#include "cstarphase/qubit_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cstar {

namespace {

void check_params(const QubitModelParams& p) {
  if (!(p.omega_c > 0.0) || !(p.omega_b > 0.0)) {
    throw std::invalid_argument("omega_c and omega_b must be positive");
  }
  if (!std::isfinite(p.hbar) || !std::isfinite(p.chi) || p.hbar <= 0.0) {
    throw std::invalid_argument("hbar must be positive and chi finite");
  }
}

void check_point(const RealVector& x) {
  if (x.size() != 3) {
    throw std::invalid_argument("parameter point must have 3 components");
  }
}

ComplexMatrix rotation_generator(const RealVector& x) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  for (int mu = 1; mu <= 3; ++mu) m += kI * x(mu - 1) * pauli(mu);
  return m;
}

}  // namespace

QubitUniverse build_qubit_universe(const QubitModelParams& p) {
  check_params(p);
  QubitUniverse uni;
  uni.lower_s = ComplexMatrix::Zero(2, 2);
  uni.lower_s(0, 1) = 1.0;
  uni.lower_e = uni.lower_s;
  const ComplexMatrix one2 = ident(2);
  uni.c_op = kron(uni.lower_s, one2);
  uni.b_op = kron(one2, uni.lower_e);
  const ComplexMatrix number_s = uni.lower_s.adjoint() * uni.lower_s;
  const ComplexMatrix number_e = uni.lower_e.adjoint() * uni.lower_e;
  const ComplexMatrix displacement = uni.lower_e + uni.lower_e.adjoint();
  uni.h0 = p.hbar * p.omega_c * kron(number_s, one2) +
           p.hbar * p.omega_b * kron(one2, number_e) +
           p.chi * kron(number_s, displacement);
  return uni;
}

ComplexMatrix pauli(int mu) {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  switch (mu) {
    case 1:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case 2:
      s(0, 1) = Complex(0.0, -1.0);
      s(1, 0) = Complex(0.0, 1.0);
      break;
    case 3:
      s(0, 0) = 1.0;
      s(1, 1) = -1.0;
      break;
    default:
      throw std::invalid_argument("pauli index must be 1, 2, or 3");
  }
  return s;
}

ComplexMatrix qubit_rotation(const RealVector& x) {
  check_point(x);
  return matrix_exp(rotation_generator(x));
}

RotationJet qubit_rotation_jet(const RealVector& x) {
  check_point(x);
  const ComplexMatrix m = rotation_generator(x);
  RotationJet jet;
  jet.u = matrix_exp(m);
  for (int mu = 1; mu <= 3; ++mu) {
    ComplexMatrix aug = ComplexMatrix::Zero(4, 4);
    aug.topLeftCorner(2, 2) = m;
    aug.bottomRightCorner(2, 2) = m;
    aug.topRightCorner(2, 2) = kI * pauli(mu);
    jet.du[mu - 1] = matrix_exp(aug).topRightCorner(2, 2);
  }
  return jet;
}

double analytic_lambda(const QubitModelParams& p) {
  check_params(p);
  const double hb = p.hbar * p.omega_b;
  const double s = std::sqrt(4.0 * p.chi * p.chi + hb * hb);
  return 0.5 * (s + 2.0 * p.hbar * p.omega_c + hb);
}

BipartiteVector analytic_amplitude(const QubitModelParams& p) {
  check_params(p);
  const double hb = p.hbar * p.omega_b;
  const double s = std::sqrt(4.0 * p.chi * p.chi + hb * hb);
  BipartiteVector phi;
  phi.n_s = 2;
  phi.n_e = 2;
  phi.amp = ComplexVector::Zero(4);
  phi.amp(2) = 2.0 * p.chi;  // |10>
  phi.amp(3) = hb + s;       // |11>
  phi.amp /= phi.amp.norm();
  return phi;
}

EigenRecord analytic_eigen(const QubitModelParams& p, const RealVector& x) {
  check_point(x);
  const ComplexMatrix u = qubit_rotation(x);
  ComplexMatrix ground = ComplexMatrix::Zero(2, 2);
  ground(0, 0) = 1.0;  // |0><0| = c c+
  ComplexMatrix excited = ComplexMatrix::Zero(2, 2);
  excited(1, 1) = 1.0;  // |1><1|

  EigenRecord rec;
  rec.x = x;
  rec.e0 = p.hbar * p.omega_c * (u * ground * u.adjoint());
  rec.lambda = analytic_lambda(p);
  rec.phi = analytic_amplitude(p);
  rec.phi.amp = kron(u, ident(2)) * rec.phi.amp;
  rec.e = rec.e0 + rec.lambda * ident(2);
  rec.rho = u * excited * u.adjoint();
  rec.possibly_degenerate = false;
  return rec;
}

AnalyticGenerators analytic_generators(const QubitModelParams& p,
                                       const RealVector& x) {
  check_params(p);
  const RotationJet jet = qubit_rotation_jet(x);
  const ComplexMatrix udag = jet.u.adjoint();
  AnalyticGenerators gen;
  for (int mu = 0; mu < 3; ++mu) {
    const ComplexMatrix w = udag * jet.du[mu];
    ComplexMatrix core = ComplexMatrix::Zero(2, 2);
    core(0, 1) = w(0, 1);
    core(1, 1) = w(1, 1);
    gen.full[mu] = jet.u * core * udag;
    ComplexMatrix diag = ComplexMatrix::Zero(2, 2);
    diag(1, 1) = w(1, 1);
    gen.reduced[mu] = jet.u * diag * udag;
    gen.coupling[mu] = w(0, 1);
  }
  return gen;
}

PullbackSplit analytic_split_pullback(const QubitModelParams& p,
                                      const ParameterPath& path) {
  check_params(p);
  path.validate();
  PullbackSplit out;
  const std::size_t n = static_cast<std::size_t>(path.size());
  out.reduced.resize(n);
  out.remainder.resize(n);
  for (int k = 0; k < path.size(); ++k) {
    const AnalyticGenerators gen = analytic_generators(p, path.xs[k]);
    const RealVector v = path.velocity(k);
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    ComplexMatrix r = ComplexMatrix::Zero(2, 2);
    for (int mu = 0; mu < 3; ++mu) {
      a += v(mu) * gen.reduced[mu];
      r += v(mu) * (gen.full[mu] - gen.reduced[mu]);
    }
    out.reduced[static_cast<std::size_t>(k)] = a;
    out.remainder[static_cast<std::size_t>(k)] = r;
  }
  return out;
}

AlgebraMembership gauge_algebra_membership(const QubitModelParams& p,
                                           const RealVector& x,
                                           const ComplexMatrix& o, double tol) {
  check_params(p);
  if (o.rows() != 2 || o.cols() != 2) {
    throw std::invalid_argument("operator must be 2x2");
  }
  const ComplexMatrix u = qubit_rotation(x);
  const ComplexMatrix hat = u.adjoint() * o * u;
  const double scale = std::max(1.0, hat.norm());

  AlgebraMembership mem;
  mem.symmetry = std::abs(hat(0, 1)) <= tol * scale;
  mem.stab0 = mem.symmetry && std::abs(hat(1, 1).real()) <= tol * scale;
  mem.stab1 = mem.symmetry && std::abs(hat(1, 1)) <= tol * scale;
  const Complex mean = 0.5 * (hat(0, 0) + hat(1, 1));
  mem.env_phase = (hat - mean * ident(2)).norm() <= tol * scale &&
                  std::abs(mean.real()) <= tol * scale;
  return mem;
}

QubitSystem make_qubit_system(const QubitModelParams& p) {
  QubitSystem sys;
  sys.params = p;
  sys.universe = build_qubit_universe(p);
  const ComplexMatrix h0 = sys.universe.h0;
  sys.h = [h0](const RealVector& x) {
    const ComplexMatrix lift = kron(qubit_rotation(x), ident(2));
    return ComplexMatrix(lift * h0 * lift.adjoint());
  };
  const double scale = p.hbar * p.omega_c;
  sys.e0 = [scale](const RealVector& x) {
    const ComplexMatrix u = qubit_rotation(x);
    ComplexMatrix ground = ComplexMatrix::Zero(2, 2);
    ground(0, 0) = 1.0;
    return ComplexMatrix(scale * (u * ground * u.adjoint()));
  };
  return sys;
}

SectionField full_rank_field(const QubitModelParams& p, const ParamGrid& grid,
                             double weight, const std::string& chart_id) {
  check_params(p);
  grid.validate();
  if (!(weight > 0.0) || !(weight < 1.0)) {
    throw std::invalid_argument("weight must lie in (0, 1)");
  }
  SectionField field;
  field.chart_id = chart_id;
  field.grid = grid;
  field.recs.resize(grid.size());

  ComplexVector base = ComplexVector::Zero(4);
  base(0) = std::sqrt(1.0 - weight);  // |00>
  base(3) = std::sqrt(weight);        // |11>
  ComplexMatrix pops = ComplexMatrix::Zero(2, 2);
  pops(0, 0) = 1.0 - weight;
  pops(1, 1) = weight;

  for (int s = 0; s < grid.size(); ++s) {
    const RealVector x = grid.point_flat(s);
    const ComplexMatrix u = qubit_rotation(x);
    EigenRecord& rec = field.recs[s];
    rec.x = x;
    rec.phi.n_s = 2;
    rec.phi.n_e = 2;
    rec.phi.amp = kron(u, ident(2)) * base;
    rec.rho = u * pops * u.adjoint();
    rec.e0 = ComplexMatrix::Zero(2, 2);
    rec.e = ComplexMatrix::Zero(2, 2);
  }
  return field;
}

namespace {

// Deterministic gentle scalar fields seeding the atlas dressing.  Amplitudes
// stay near 0.1 and frequencies near 1 so that second derivatives remain
// O(0.1) and finite-difference residuals on fine grids stay far below the
// tolerances under test.
double chart_phase(int chart, const RealVector& x) {
  return 0.20 * std::sin(0.8 * x(0) + 0.5 * x(2) + 0.7 * chart) +
         0.15 * std::cos(0.6 * x(1) - 0.4 * x(0) + 0.3 * chart);
}

Complex twist_upper(int salt, const RealVector& x) {
  return Complex(0.14 * std::sin(0.9 * x(0) - 0.5 * x(2) + 0.31 * salt),
                 0.09 * std::cos(0.8 * x(1) + 0.6 * x(0) - 0.17 * salt));
}

Complex twist_lower(int salt, const RealVector& x) {
  return Complex(0.12 * std::cos(0.7 * x(0) + 0.8 * x(2) + 0.23 * salt),
                 0.11 * std::sin(0.5 * x(1) - 0.9 * x(2) + 0.41 * salt));
}

double twist_corner(int salt, const RealVector& x) {
  return 0.13 * std::sin(0.6 * x(0) + 0.7 * x(1) + 0.8 * x(2) + 0.59 * salt);
}

double transition_phase(int salt, const RealVector& x) {
  return 0.25 * std::sin(0.7 * x(0) + 0.9 * x(1) - 0.4 * x(2) + 0.37 * salt) +
         0.18 * std::cos(0.5 * x(2) - 0.8 * x(0) + 0.29 * salt);
}

}  // namespace

ChartAtlas build_demo_atlas(const QubitModelParams& p, const ParamGrid& grid,
                            int n_charts, bool sheared_transitions) {
  check_params(p);
  grid.validate();
  if (n_charts < 2 || n_charts > 8) {
    throw std::invalid_argument("chart count must lie in [2, 8]");
  }
  const int n = grid.size();

  ChartAtlas atlas;
  atlas.grid = grid;
  for (int a = 0; a < n_charts; ++a) {
    atlas.ids.push_back(std::string("chart-") + static_cast<char>('a' + a));
  }

  std::vector<EigenRecord> base(n);
  std::vector<ComplexMatrix> u_field(n);
  for (int s = 0; s < n; ++s) {
    const RealVector x = grid.point_flat(s);
    base[s] = analytic_eigen(p, x);
    u_field[s] = qubit_rotation(x);
  }

  atlas.charts.resize(n_charts);
  for (int a = 0; a < n_charts; ++a) {
    SectionField& field = atlas.charts[a];
    field.chart_id = atlas.ids[a];
    field.grid = grid;
    field.recs = base;
    for (int s = 0; s < n; ++s) {
      const double theta = chart_phase(a, grid.point_flat(s));
      field.recs[s].phi.amp *= std::exp(kI * theta);
    }
  }

  atlas.g.assign(n_charts, std::vector<std::vector<ComplexMatrix>>(n_charts));
  for (int a = 0; a < n_charts; ++a) {
    atlas.g[a][a].assign(n, ident(2));
  }
  for (int a = 0; a < n_charts; ++a) {
    for (int b = a + 1; b < n_charts; ++b) {
      const int salt = 7 * a + 13 * b;
      atlas.g[a][b].resize(n);
      atlas.g[b][a].resize(n);
      for (int s = 0; s < n; ++s) {
        const RealVector x = grid.point_flat(s);
        ComplexMatrix hat;
        if (sheared_transitions) {
          ComplexMatrix gen = ComplexMatrix::Zero(2, 2);
          gen(0, 0) = twist_upper(salt, x);
          gen(1, 0) = twist_lower(salt, x);
          gen(1, 1) = kI * twist_corner(salt, x);
          hat = matrix_exp(gen);
        } else {
          hat = std::exp(kI * transition_phase(salt, x)) * ident(2);
        }
        const ComplexMatrix& u = u_field[s];
        atlas.g[a][b][s] = u * hat * u.adjoint();
        atlas.g[b][a][s] = u * hat.inverse() * u.adjoint();
      }
    }
  }
  return atlas;
}

}  // namespace cstar
