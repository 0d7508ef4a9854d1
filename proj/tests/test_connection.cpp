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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>

#include "cstarphase/connection.hpp"
#include "cstarphase/cstar_module.hpp"
#include "cstarphase/qubit_model.hpp"

using namespace cstar;

namespace {

RealVector point3(double a, double b, double c) {
  RealVector x(3);
  x << a, b, c;
  return x;
}

ParamGrid line_grid(double center, double h) {
  ParamGrid g;
  g.origin = point3(center - h, 0.1, -0.2);
  g.axes = {0};
  g.dims = {3};
  g.steps = RealVector(1);
  g.steps << h;
  return g;
}

ParamGrid plane_grid(int n, double h) {
  ParamGrid g;
  g.origin = point3(0.05, 0.0, -0.1);
  g.axes = {0, 2};
  g.dims = {n, n};
  g.steps = RealVector(2);
  g.steps << h, h;
  return g;
}

ParamGrid cube_grid(int n, double h) {
  ParamGrid g;
  g.origin = point3(0.05, -0.02, -0.1);
  g.axes = {0, 1, 2};
  g.dims = {n, n, n};
  g.steps = RealVector(3);
  g.steps << h, h, h;
  return g;
}

SectionFamily analytic_reference(const QubitModelParams& p) {
  return [p](const RealVector& x) { return analytic_eigen(p, x).phi; };
}

SectionField eigen_section(const QubitSystem& sys, const ParamGrid& grid) {
  return build_section_field(sys.h, sys.e0, BranchSelector{}, grid, 2, 2,
                             analytic_reference(sys.params));
}

std::vector<ComplexMatrix> rho_field(const SectionField& field) {
  std::vector<ComplexMatrix> out;
  out.reserve(field.recs.size());
  for (const auto& rec : field.recs) out.push_back(rec.rho);
  return out;
}

// Largest sample norm of W rho + rho W^dag - d_mu rho with both derivatives
// taken on the grid itself.
double density_transport_residual(const SectionField& field,
                                  const MatrixOneForm& w) {
  const std::vector<ComplexMatrix> rho = rho_field(field);
  double worst = 0.0;
  for (int mu = 0; mu < field.grid.ndim(); ++mu) {
    const std::vector<ComplexMatrix> drho =
        grid_derivative(rho, field.grid, mu);
    for (int s = 0; s < field.grid.size(); ++s) {
      const auto k = static_cast<std::size_t>(s);
      const ComplexMatrix& wm = w.comp[static_cast<std::size_t>(mu)][k];
      worst = std::max(
          worst, (wm * rho[k] + rho[k] * wm.adjoint() - drho[k]).norm());
    }
  }
  return worst;
}

double two_form_gap(const MatrixTwoForm& a, const MatrixTwoForm& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.comp.size(); ++k) {
    for (std::size_t s = 0; s < a.comp[k].size(); ++s) {
      worst = std::max(worst, (a.comp[k][s] - b.comp[k][s]).norm());
    }
  }
  return worst;
}

double three_form_gap(const MatrixThreeForm& a, const MatrixThreeForm& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.comp.size(); ++k) {
    for (std::size_t s = 0; s < a.comp[k].size(); ++s) {
      worst = std::max(worst, (a.comp[k][s] - b.comp[k][s]).norm());
    }
  }
  return worst;
}

double max_one_form_gap(const MatrixOneForm& a, const MatrixOneForm& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.comp.size(); ++k) {
    for (std::size_t s = 0; s < a.comp[k].size(); ++s) {
      worst = std::max(worst, (a.comp[k][s] - b.comp[k][s]).norm());
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("grid indexing round-trips and validates") {
  ParamGrid g;
  g.origin = point3(1.0, 2.0, 3.0);
  g.axes = {0, 2, 1};
  g.dims = {3, 4, 5};
  g.steps = RealVector(3);
  g.steps << 0.1, 0.2, 0.3;
  g.validate();

  CHECK(g.ndim() == 3);
  CHECK(g.size() == 60);
  CHECK(g.stride(2) == 1);
  CHECK(g.stride(1) == 5);
  CHECK(g.stride(0) == 20);

  for (int s = 0; s < g.size(); ++s) {
    const std::vector<int> idx = g.unflat(s);
    CHECK(g.flat(idx) == s);
  }
  const std::vector<int> idx{2, 3, 1};
  const RealVector x = g.point(idx);
  CHECK(x(0) == doctest::Approx(1.0 + 2 * 0.1));
  CHECK(x(2) == doctest::Approx(3.0 + 3 * 0.2));
  CHECK(x(1) == doctest::Approx(2.0 + 1 * 0.3));
  CHECK((g.point_flat(g.flat(idx)) - x).norm() == 0.0);

  ParamGrid bad = g;
  bad.dims = {3, 4};
  CHECK_THROWS_WITH_AS(bad.validate(), "grid too small", std::invalid_argument);
  bad = g;
  bad.axes = {0, 1, 7};
  CHECK_THROWS_WITH_AS(bad.validate(), "grid too small", std::invalid_argument);
}

TEST_CASE("grid derivatives converge at second order everywhere") {
  ComplexMatrix c0(2, 2), c1(2, 2);
  c0 << 1.0, kI, 0.0, 2.0;
  c1 << 0.5, -1.0, Complex(0.0, -2.0), 1.5;
  const auto f = [&](double t) {
    return ComplexMatrix(std::sin(1.3 * t) * c0 + std::cos(0.7 * t) * c1);
  };
  const auto df = [&](double t) {
    return ComplexMatrix(1.3 * std::cos(1.3 * t) * c0 -
                         0.7 * std::sin(0.7 * t) * c1);
  };

  const auto max_err = [&](int n, double h) {
    ParamGrid g;
    g.origin = point3(0.3, 0.0, 0.0);
    g.axes = {0};
    g.dims = {n};
    g.steps = RealVector(1);
    g.steps << h;
    std::vector<ComplexMatrix> field(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s)
      field[static_cast<std::size_t>(s)] = f(g.point_flat(s)(0));
    const std::vector<ComplexMatrix> d = grid_derivative(field, g, 0);
    double worst = 0.0;
    for (int s = 0; s < n; ++s)
      worst = std::max(
          worst, (d[static_cast<std::size_t>(s)] - df(g.point_flat(s)(0))).norm());
    return worst;
  };

  const double coarse = max_err(9, 0.1);
  const double fine = max_err(17, 0.05);
  CHECK(coarse / fine > 3.4);  // includes the one-sided boundary stencils
  CHECK(fine < 5e-3);          // boundary stencil dominates: ~h^2 |f'''| / 3

  ParamGrid tiny;
  tiny.origin = point3(0.0, 0.0, 0.0);
  tiny.axes = {0};
  tiny.dims = {2};
  tiny.steps = RealVector(1);
  tiny.steps << 0.1;
  std::vector<ComplexMatrix> two(2, c0);
  CHECK_THROWS_WITH_AS(grid_derivative(two, tiny, 0), "grid too small",
                       std::invalid_argument);
}

TEST_CASE("form algebra: storage antisymmetry, graded products, exact d^2 = 0") {
  const ParamGrid g = cube_grid(3, 0.07);
  const int n = g.size();

  // Two generic smooth one-forms.
  MatrixOneForm a, b;
  a.grid = b.grid = g;
  a.comp.resize(3);
  b.comp.resize(3);
  for (int mu = 0; mu < 3; ++mu) {
    a.comp[static_cast<std::size_t>(mu)].resize(static_cast<std::size_t>(n));
    b.comp[static_cast<std::size_t>(mu)].resize(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      const RealVector x = g.point_flat(s);
      ComplexMatrix ma(2, 2), mb(2, 2);
      ma << std::sin(1.1 * x(0) + 0.3 * mu), Complex(0.2 * mu, 0.4) * x(2),
          std::cos(0.9 * x(1)), Complex(0.0, 1.0) * std::sin(0.5 * x(2) + mu);
      mb << std::cos(0.8 * x(2) - 0.2 * mu), Complex(0.1, -0.3) * x(0),
          0.7 * x(1) * x(2), std::sin(1.7 * x(0) - 0.1 * mu);
      a.comp[static_cast<std::size_t>(mu)][static_cast<std::size_t>(s)] = ma;
      b.comp[static_cast<std::size_t>(mu)][static_cast<std::size_t>(s)] = mb;
    }
  }

  const MatrixTwoForm ab = wedge(a, b);
  // Index antisymmetry is built into the accessor.
  CHECK((ab.at(0, 1, 4) + ab.at(1, 0, 4)).norm() == 0.0);
  CHECK(ab.at(1, 1, 4).norm() == 0.0);
  // Component formula at one node.
  const std::size_t s0 = 13;
  CHECK((ab.at(0, 2, 13) -
         (a.comp[0][s0] * b.comp[2][s0] - a.comp[2][s0] * b.comp[0][s0]))
            .norm() < 1e-14);

  // The graded commutator is symmetric and vanishes for scalar forms.
  const MatrixTwoForm gab = graded_comm(a, b);
  const MatrixTwoForm gba = graded_comm(b, a);
  CHECK(two_form_gap(gab, gba) < 1e-14);

  MatrixOneForm sa = a, sb = b;
  for (int mu = 0; mu < 3; ++mu) {
    for (int s = 0; s < n; ++s) {
      const RealVector x = g.point_flat(s);
      sa.comp[static_cast<std::size_t>(mu)][static_cast<std::size_t>(s)] =
          Complex(std::sin(x(0) + mu), x(2)) * ident(2);
      sb.comp[static_cast<std::size_t>(mu)][static_cast<std::size_t>(s)] =
          Complex(std::cos(x(1) - mu), 0.3 * x(0)) * ident(2);
    }
  }
  const MatrixTwoForm gscalar = graded_comm(sa, sb);
  double worst = 0.0;
  for (const auto& row : gscalar.comp)
    for (const auto& m : row) worst = std::max(worst, m.norm());
  CHECK(worst < 1e-14);

  // d(d a) vanishes exactly: the per-axis stencils commute, boundaries included.
  const MatrixThreeForm dda = exterior_d(exterior_d(a));
  double dd = 0.0;
  for (const auto& row : dda.comp)
    for (const auto& m : row) dd = std::max(dd, m.norm());
  CHECK(dd < 1e-12);

  // Mixed commutator component formula at one node.
  const MatrixThreeForm c = comm_one_two(a, ab);
  const ComplexMatrix direct =
      a.comp[0][s0] * ab.at(1, 2, 13) - a.comp[1][s0] * ab.at(0, 2, 13) +
      a.comp[2][s0] * ab.at(0, 1, 13) -
      (ab.at(0, 1, 13) * a.comp[2][s0] - ab.at(0, 2, 13) * a.comp[1][s0] +
       ab.at(1, 2, 13) * a.comp[0][s0]);
  CHECK((c.comp[0][s0] - direct).norm() < 1e-13);
}

TEST_CASE("generator equation: minimal-norm solution and inconsistency") {
  ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
  rho(1, 1) = 1.0;

  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = Complex(0.3, -0.2);
  m(1, 1) = Complex(0.0, 0.7);
  const ComplexMatrix w = solve_generator_equation(m, rho);
  CHECK((w * rho - m).norm() < 1e-13);
  // Kernel columns stay zero: the solution is the minimal-norm one.
  CHECK(std::abs(w(0, 0)) + std::abs(w(1, 0)) < 1e-14);

  // Full-rank density: unique solution m rho^{-1}.
  ComplexMatrix rho2(2, 2);
  rho2 << 0.7, Complex(0.1, 0.05), Complex(0.1, -0.05), 0.3;
  const ComplexMatrix w2 = solve_generator_equation(m, rho2);
  CHECK((w2 * rho2 - m).norm() < 1e-13);

  // Support on the kernel of rho cannot be reproduced by any W.
  ComplexMatrix bad = ComplexMatrix::Zero(2, 2);
  bad(0, 0) = 1.0;
  CHECK_THROWS_WITH_AS(solve_generator_equation(bad, rho),
                       "no solution: inconsistent right-hand side",
                       std::runtime_error);
}

TEST_CASE("section generator reproduces the density derivative") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const QubitSystem sys = make_qubit_system(p);

  const auto residual_at = [&](double h) {
    const SectionField field = eigen_section(sys, line_grid(0.2, h));
    const MatrixOneForm w = generator_one_form(field);
    return density_transport_residual(field, w);
  };

  const double coarse = residual_at(0.02);
  const double fine = residual_at(0.01);
  CHECK(coarse / fine > 3.4);
  CHECK(residual_at(5e-5) < 1e-8);

  // Sample-to-sample alignment (no phase reference) also yields a smooth
  // section: consecutive overlaps are nearly real positive.
  const ParamGrid g = line_grid(0.2, 0.01);
  BranchSelector sel;
  sel.initial_branch = 3;
  const SectionField chain = build_section_field(sys.h, sys.e0, sel, g, 2, 2);
  for (int s = 1; s < g.size(); ++s) {
    const Complex ov = overlap(chain.recs[static_cast<std::size_t>(s - 1)].phi,
                               chain.recs[static_cast<std::size_t>(s)].phi);
    CHECK(ov.real() > 0.99);
  }
}

TEST_CASE("adiabatic split: exact recombination, closed-form agreement") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const QubitSystem sys = make_qubit_system(p);
  const ParamGrid grid = plane_grid(3, 5e-5);
  const SectionField field = eigen_section(sys, grid);

  const MatrixOneForm w = generator_one_form(field);
  const SplitGenerator split = split_generator(field, sys.h);

  double recombine = 0.0, trace_weight = 0.0, reduced_gap = 0.0,
         remainder_gap = 0.0;
  const std::array<int, 2> param_axis{0, 2};
  for (int mu = 0; mu < grid.ndim(); ++mu) {
    const auto mk = static_cast<std::size_t>(mu);
    for (int s = 0; s < grid.size(); ++s) {
      const auto k = static_cast<std::size_t>(s);
      const EigenRecord& rec = field.recs[k];
      const ComplexMatrix sum = split.reduced.comp[mk][k] + split.remainder.comp[mk][k];
      recombine = std::max(recombine, (sum - w.comp[mk][k]).norm());
      trace_weight = std::max(
          trace_weight,
          std::abs((rec.rho * split.remainder.comp[mk][k]).trace()));

      const AnalyticGenerators ana = analytic_generators(p, grid.point_flat(s));
      const auto pa = static_cast<std::size_t>(param_axis[mk]);
      reduced_gap = std::max(
          reduced_gap, (split.reduced.comp[mk][k] - ana.reduced[pa]).norm());
      remainder_gap = std::max(
          remainder_gap,
          (split.remainder.comp[mk][k] - (ana.full[pa] - ana.reduced[pa])).norm());
    }
  }
  CHECK(recombine < 1e-12);
  CHECK(trace_weight < 1e-10);
  CHECK(reduced_gap < 1e-8);
  CHECK(remainder_gap < 1e-8);
}

TEST_CASE("invertible densities: breve shortcut and corruption detection") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const ParamGrid grid = line_grid(0.15, 5e-5);
  const SectionField field = full_rank_field(p, grid, 0.3);

  const MatrixOneForm w = generator_one_form(field);
  const std::vector<ComplexMatrix> breve =
      breve_generator(rho_field(field), grid, 0);

  double equiv = 0.0;
  for (int s = 0; s < grid.size(); ++s) {
    const auto k = static_cast<std::size_t>(s);
    const ComplexMatrix diff = w.comp[0][k] - breve[k];
    equiv = std::max(equiv, j_residual(diff, field.recs[k].rho));
  }
  CHECK(equiv < 1e-8);

  // A 1e-3 corruption of the generator shows up at least at 1e-4 in the
  // density-transport residual.
  CHECK(density_transport_residual(field, w) < 1e-8);
  MatrixOneForm corrupt = w;
  const RealVector x0 = grid.point_flat(0);
  const ComplexMatrix u = qubit_rotation(x0);
  for (int s = 0; s < grid.size(); ++s) {
    corrupt.comp[0][static_cast<std::size_t>(s)] += 1e-3 * u * pauli(1) * u.adjoint();
  }
  CHECK(density_transport_residual(field, corrupt) > 1e-4);

  // The shortcut requires an invertible density everywhere.
  const SectionField rank1 =
      eigen_section(make_qubit_system(p), line_grid(0.15, 5e-5));
  CHECK_THROWS_WITH_AS(breve_generator(rho_field(rank1), grid, 0),
                       "breve generator undefined; use generator_from_section",
                       std::runtime_error);
}

TEST_CASE("stabilizer projection is idempotent and lands in the algebra") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const RealVector x = point3(0.4, -0.3, 0.2);

  ComplexMatrix rho_hat(2, 2);
  rho_hat << 0.75, 0.0, 0.0, 0.25;
  const ComplexMatrix u = qubit_rotation(x);
  const ComplexMatrix rho = u * rho_hat * u.adjoint();

  ComplexMatrix generic(2, 2);
  generic << Complex(0.4, 0.7), Complex(-0.3, 0.2), Complex(0.9, -0.1),
      Complex(-0.6, 0.5);
  const ComplexMatrix pj = j_part(generic, rho);
  CHECK(j_residual(pj, rho) < 1e-12);
  CHECK((j_part(pj, rho) - pj).norm() < 1e-12);

  // An element already in the stabilizer algebra is fixed.  For diagonal rho
  // the algebra contains every X with X11 p1 + p1 conj(X11) = 0 etc.; take
  // the rotated image of an imaginary diagonal plus a balanced off-diagonal.
  ComplexMatrix member_hat(2, 2);
  member_hat << Complex(0.0, 0.4), Complex(0.2, 0.1),
      -rho_hat(1, 1).real() / rho_hat(0, 0).real() * Complex(0.2, -0.1),
      Complex(0.0, -0.9);
  const ComplexMatrix member = u * member_hat * u.adjoint();
  REQUIRE(j_residual(member, rho) < 1e-12);
  CHECK((j_part(member, rho) - member).norm() < 1e-12);

  // Rank-deficient density: projection still lands in the algebra.
  ComplexMatrix rho1_hat = ComplexMatrix::Zero(2, 2);
  rho1_hat(1, 1) = 1.0;
  const ComplexMatrix rho1 = u * rho1_hat * u.adjoint();
  const ComplexMatrix pj1 = j_part(generic, rho1);
  CHECK(j_residual(pj1, rho1) < 1e-12);
  CHECK((j_part(pj1, rho1) - pj1).norm() < 1e-12);
}

TEST_CASE("curving data: stabilizer values, reduced identity, three-forms") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const QubitSystem sys = make_qubit_system(p);

  const auto curving_at = [&](double h) {
    const SectionField field = eigen_section(sys, plane_grid(3, h));
    const SplitGenerator split = split_generator(field, sys.h);
    const MatrixOneForm w = generator_one_form(field);
    const CurvatureData data =
        curvatures(w, split.reduced, split.remainder);
    return std::make_pair(curving_j_residual(data.curving, field), data);
  };

  const double coarse = curving_at(0.02).first;
  const double fine = curving_at(0.01).first;
  CHECK(coarse / fine > 3.2);
  CHECK(curving_at(5e-4).first < 1e-6);

  // B = dA - A^A + F holds per node as an algebraic identity of the split.
  {
    const SectionField field = eigen_section(sys, plane_grid(3, 0.01));
    const SplitGenerator split = split_generator(field, sys.h);
    const MatrixOneForm w = generator_one_form(field);
    const CurvatureData data = curvatures(w, split.reduced, split.remainder);
    MatrixTwoForm rebuilt = exterior_d(split.reduced);
    const MatrixTwoForm aa = wedge(split.reduced, split.reduced);
    for (std::size_t k = 0; k < rebuilt.comp.size(); ++k) {
      for (std::size_t s = 0; s < rebuilt.comp[k].size(); ++s) {
        rebuilt.comp[k][s] -= aa.comp[k][s];
        rebuilt.comp[k][s] += data.fake.comp[k][s];
      }
    }
    CHECK(two_form_gap(data.curving, rebuilt) < 1e-12);
    CHECK_FALSE(data.has_three_form);
  }

  // On a 3-D grid both three-form routes agree up to discretization error.
  const auto three_gap_at = [&](double h) {
    const SectionField field = eigen_section(sys, cube_grid(3, h));
    const SplitGenerator split = split_generator(field, sys.h);
    const MatrixOneForm w = generator_one_form(field);
    const CurvatureData data = curvatures(w, split.reduced, split.remainder);
    REQUIRE(data.has_three_form);
    return three_form_gap(data.true_from_curving, data.true_from_fake);
  };
  const double gc = three_gap_at(0.02);
  const double gf = three_gap_at(0.01);
  CHECK(gc / gf > 3.0);
  CHECK(gf < 1e-3);
}

TEST_CASE("gauge transformation matches a directly dressed section") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const ParamGrid grid = line_grid(0.2, 2e-4);
  const SectionField field = full_rank_field(p, grid, 0.35);
  const MatrixOneForm w = generator_one_form(field);

  // Dress by a smooth unitary field and recompute from scratch.
  const auto g_at = [](const RealVector& x) {
    return qubit_rotation(point3(0.3 * x(0), -0.1, 0.2 + 0.5 * x(0)));
  };
  SectionField dressed = field;
  std::vector<ComplexMatrix> g_field(static_cast<std::size_t>(grid.size()));
  for (int s = 0; s < grid.size(); ++s) {
    const auto k = static_cast<std::size_t>(s);
    const ComplexMatrix g = g_at(grid.point_flat(s));
    g_field[k] = g;
    dressed.recs[k].phi = apply_system(g, field.recs[k].phi);
    dressed.recs[k].rho = star_inner(dressed.recs[k].phi, dressed.recs[k].phi);
  }
  const MatrixOneForm direct = generator_one_form(dressed);
  const MatrixOneForm transformed = gauge_transform_generator(w, g_field);
  CHECK(max_one_form_gap(direct, transformed) < 1e-6);

  // A constant dressing has no derivative term at all.
  std::vector<ComplexMatrix> const_g(static_cast<std::size_t>(grid.size()),
                                     qubit_rotation(point3(0.2, 0.4, -0.3)));
  const MatrixOneForm moved = gauge_transform_generator(w, const_g);
  for (int s = 0; s < grid.size(); ++s) {
    const auto k = static_cast<std::size_t>(s);
    const ComplexMatrix want =
        const_g[k] * w.comp[0][k] * const_g[k].adjoint();
    CHECK((moved.comp[0][k] - want).norm() < 1e-11);
  }

  std::vector<ComplexMatrix> singular = g_field;
  singular[1] = ComplexMatrix::Zero(2, 2);
  CHECK_THROWS_WITH_AS(gauge_transform_generator(w, singular), "singular g",
                       std::invalid_argument);
}

TEST_CASE("rank changes across the grid are rejected") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const ParamGrid grid = line_grid(0.15, 0.01);
  SectionField field = full_rank_field(p, grid, 0.3);
  // Collapse one node onto a pure state.
  field.recs[1].rho = ComplexMatrix::Zero(2, 2);
  field.recs[1].rho(1, 1) = 1.0;
  CHECK_THROWS_WITH_AS(generator_from_section(field, 0),
                       "rank change detected", std::runtime_error);
}

TEST_CASE("atlas transitions: cocycles at machine precision, eta in algebra") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const QubitSystem sys = make_qubit_system(p);
  const ParamGrid grid = plane_grid(3, 5e-4);

  // Both transition styles: the cocycle identities are algebraic in the
  // triple products, and the potential-law combination lands in the
  // stabilizer algebra for every density-compatible transition field.
  for (const bool sheared : {false, true}) {
    CAPTURE(sheared);
    const ChartAtlas atlas = build_demo_atlas(p, grid, 4, sheared);
    const std::vector<ChartForms> forms = atlas_forms(atlas, sys.h);
    const AtlasTransitions tr = transition_functions(atlas, forms);

    CHECK(tr.report.rho_consistency < 1e-12);
    CHECK(tr.report.h_fixes_rho < 1e-12);
    CHECK(tr.report.cocycle_conj < 1e-10);
    CHECK(tr.report.cocycle_inv < 1e-10);
    CHECK(tr.report.cocycle_swap < 1e-10);
    CHECK(tr.report.cocycle_quad < 1e-10);
    CHECK(tr.report.eta_extraction < 1e-6);
    CHECK(tr.report.eta_j_residual < 1e-6);
    CHECK(tr.report.eta_cocycle < 1e-5);

    // The triple products are nontrivial: this atlas genuinely fails to be
    // a plain principal cocycle.
    double h_dev = 0.0;
    for (int s = 0; s < grid.size(); ++s) {
      h_dev = std::max(
          h_dev, (tr.h[0][1][2][static_cast<std::size_t>(s)] - ident(2)).norm());
    }
    CHECK(h_dev > 1e-2);
  }
}

TEST_CASE("curvature gauge laws require the commutator correction") {
  const QubitModelParams p{1.0, 1.0, 1.0, 0.3};
  const QubitSystem sys = make_qubit_system(p);
  const ParamGrid grid = plane_grid(3, 5e-4);
  const ChartAtlas atlas = build_demo_atlas(p, grid, 4);
  const std::vector<ChartForms> forms = atlas_forms(atlas, sys.h);
  const AtlasTransitions tr = transition_functions(atlas, forms);

  const GaugeLawChecks laws = curvature_gauge_check(atlas, forms, tr);
  CHECK(laws.curving_law < 1e-6);
  CHECK(laws.fake_law < 1e-6);
  CHECK(laws.chi_cocycle < 1e-6);

  // Flip the sign of the commutator correction for the pair (0, 1): the
  // curving law must then fail by a wide margin, pinning the sign.
  const MatrixOneForm& eta = tr.eta[0][1];
  const MatrixTwoForm d_eta = exterior_d(eta);
  const MatrixTwoForm eta_eta = wedge(eta, eta);
  const MatrixTwoForm a_eta = graded_comm(forms[0].reduced, eta);
  const MatrixTwoForm chi = graded_comm(forms[0].remainder, eta);

  double correct = 0.0, flipped = 0.0, chi_size = 0.0;
  for (std::size_t k = 0; k < d_eta.comp.size(); ++k) {
    for (int s = 0; s < grid.size(); ++s) {
      const auto sk = static_cast<std::size_t>(s);
      const ComplexMatrix& g = atlas.g[0][1][sk];
      const ComplexMatrix gi = g.inverse();
      const ComplexMatrix base = forms[0].curving.comp[k][sk] +
                                 d_eta.comp[k][sk] - eta_eta.comp[k][sk] -
                                 a_eta.comp[k][sk];
      const ComplexMatrix minus =
          gi * (base - chi.comp[k][sk]) * g;
      const ComplexMatrix plus = gi * (base + chi.comp[k][sk]) * g;
      correct = std::max(correct,
                         (forms[1].curving.comp[k][sk] - minus).norm());
      flipped = std::max(flipped,
                         (forms[1].curving.comp[k][sk] - plus).norm());
      chi_size = std::max(chi_size, chi.comp[k][sk].norm());
    }
  }
  CHECK(correct < 1e-6);
  CHECK(chi_size > 1e-3);
  CHECK(flipped > 1e-3);
  CHECK(flipped > 1000.0 * correct);

  // Same pin for the fake-curvature law.
  double fake_correct = 0.0, fake_flipped = 0.0;
  for (std::size_t k = 0; k < chi.comp.size(); ++k) {
    for (int s = 0; s < grid.size(); ++s) {
      const auto sk = static_cast<std::size_t>(s);
      const ComplexMatrix& g = atlas.g[0][1][sk];
      const ComplexMatrix gi = g.inverse();
      const ComplexMatrix fa = forms[0].fake.comp[k][sk];
      const ComplexMatrix fb = forms[1].fake.comp[k][sk];
      fake_correct = std::max(
          fake_correct, (fb - (gi * fa * g - gi * chi.comp[k][sk] * g)).norm());
      fake_flipped = std::max(
          fake_flipped, (fb - (gi * fa * g + gi * chi.comp[k][sk] * g)).norm());
    }
  }
  CHECK(fake_correct < 1e-6);
  CHECK(fake_flipped > 1e-3);

  // Sheared transitions conjugate the density correctly but move the
  // remainder, so only the curving law (which rests on the potential law
  // alone) survives; the fake-curvature law and its cocycle need the
  // remainder to transform by conjugation and acquire order-one residuals.
  const ChartAtlas moved = build_demo_atlas(p, grid, 4, true);
  const std::vector<ChartForms> moved_forms = atlas_forms(moved, sys.h);
  const AtlasTransitions moved_tr = transition_functions(moved, moved_forms);
  const GaugeLawChecks moved_laws =
      curvature_gauge_check(moved, moved_forms, moved_tr);
  CHECK(moved_laws.curving_law < 1e-6);
  CHECK(moved_laws.fake_law > 1e-3);
  CHECK(moved_laws.chi_cocycle > 1e-3);
}
