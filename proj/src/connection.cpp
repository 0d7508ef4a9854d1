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

#include "cstarphase/connection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cstar {

namespace {

ComplexMatrix small_inverse(const ComplexMatrix& m, const char* err) {
  Eigen::FullPivLU<ComplexMatrix> lu(m);
  if (!lu.isInvertible()) throw std::invalid_argument(err);
  return lu.inverse();
}

// Spectral decomposition of a (numerically) Hermitian PSD matrix with the
// range listed first, descending.
struct RangeSplit {
  ComplexMatrix q;      // unitary, range columns first
  RealVector range_p;   // positive eigenvalues, descending
  int rank = 0;
};

RangeSplit range_split(const ComplexMatrix& rho, double rank_tol) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
      ComplexMatrix(0.5 * (rho + rho.adjoint())));
  if (es.info() != Eigen::Success) throw std::runtime_error("rank change detected");
  const RealVector& p = es.eigenvalues();  // ascending
  const int n = static_cast<int>(p.size());
  const double cut = rank_tol * std::max(p(n - 1), 1e-300);
  RangeSplit out;
  out.q = ComplexMatrix(n, n);
  std::vector<int> range_idx, ker_idx;
  for (int i = n - 1; i >= 0; --i) {
    if (p(i) > cut) range_idx.push_back(i);
    else ker_idx.push_back(i);
  }
  out.rank = static_cast<int>(range_idx.size());
  out.range_p = RealVector(out.rank);
  int col = 0;
  for (int i : range_idx) {
    out.q.col(col) = es.eigenvectors().col(i);
    out.range_p(col) = p(i);
    ++col;
  }
  for (int i : ker_idx) out.q.col(col++) = es.eigenvectors().col(i);
  return out;
}

int rho_rank(const ComplexMatrix& rho, double rank_tol) {
  return range_split(rho, rank_tol).rank;
}

void check_constant_rank(const SectionField& field, double rank_tol) {
  if (field.recs.empty()) throw std::invalid_argument("grid too small");
  const int r0 = rho_rank(field.recs.front().rho, rank_tol);
  for (const auto& rec : field.recs) {
    if (rho_rank(rec.rho, rank_tol) != r0) throw std::runtime_error("rank change detected");
  }
}

std::vector<ComplexMatrix> amplitude_field(const SectionField& field) {
  std::vector<ComplexMatrix> amps;
  amps.reserve(field.recs.size());
  for (const auto& rec : field.recs) amps.push_back(rec.phi.amp);
  return amps;
}

MatrixOneForm blank_one_form(const std::string& chart_id, const ParamGrid& grid) {
  MatrixOneForm w;
  w.chart_id = chart_id;
  w.grid = grid;
  w.comp.resize(grid.ndim());
  return w;
}

MatrixTwoForm blank_two_form(const std::string& chart_id, const ParamGrid& grid) {
  MatrixTwoForm b;
  b.chart_id = chart_id;
  b.grid = grid;
  b.pairs = MatrixTwoForm::index_pairs(grid.ndim());
  b.comp.resize(b.pairs.size());
  return b;
}

MatrixThreeForm blank_three_form(const std::string& chart_id, const ParamGrid& grid) {
  MatrixThreeForm t;
  t.chart_id = chart_id;
  t.grid = grid;
  t.triples = MatrixThreeForm::index_triples(grid.ndim());
  t.comp.resize(t.triples.size());
  return t;
}

}  // namespace

int ParamGrid::size() const {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

void ParamGrid::validate() const {
  const size_t nd = axes.size();
  if (dims.size() != nd || static_cast<size_t>(steps.size()) != nd || nd == 0) {
    throw std::invalid_argument("grid too small");
  }
  for (size_t j = 0; j < nd; ++j) {
    if (dims[j] < 1 || axes[j] < 0 || axes[j] >= origin.size()) {
      throw std::invalid_argument("grid too small");
    }
  }
}

int ParamGrid::stride(int axis) const {
  int s = 1;
  for (size_t j = axis + 1; j < dims.size(); ++j) s *= dims[j];
  return s;
}

int ParamGrid::flat(const std::vector<int>& idx) const {
  int f = 0;
  for (size_t j = 0; j < dims.size(); ++j) f = f * dims[j] + idx[j];
  return f;
}

std::vector<int> ParamGrid::unflat(int flat_index) const {
  std::vector<int> idx(dims.size());
  for (int j = static_cast<int>(dims.size()) - 1; j >= 0; --j) {
    idx[j] = flat_index % dims[j];
    flat_index /= dims[j];
  }
  return idx;
}

RealVector ParamGrid::point(const std::vector<int>& idx) const {
  RealVector x = origin;
  for (size_t j = 0; j < axes.size(); ++j) {
    x(axes[j]) += steps(j) * static_cast<double>(idx[j]);
  }
  return x;
}

RealVector ParamGrid::point_flat(int flat_index) const {
  return point(unflat(flat_index));
}

std::vector<ComplexMatrix> grid_derivative(const std::vector<ComplexMatrix>& values,
                                           const ParamGrid& grid, int axis) {
  grid.validate();
  if (axis < 0 || axis >= grid.ndim()) throw std::invalid_argument("grid too small");
  const int dim = grid.dims[axis];
  if (dim < 3) throw std::invalid_argument("grid too small");
  const int n = grid.size();
  if (static_cast<int>(values.size()) != n) throw std::invalid_argument("grid too small");
  const int str = grid.stride(axis);
  const double inv2h = 1.0 / (2.0 * grid.steps(axis));
  std::vector<ComplexMatrix> out(n);
  for (int s = 0; s < n; ++s) {
    const int i = (s / str) % dim;
    if (i == 0) {
      out[s] = (-3.0 * values[s] + 4.0 * values[s + str] - values[s + 2 * str]) * inv2h;
    } else if (i == dim - 1) {
      out[s] = (3.0 * values[s] - 4.0 * values[s - str] + values[s - 2 * str]) * inv2h;
    } else {
      out[s] = (values[s + str] - values[s - str]) * inv2h;
    }
  }
  return out;
}

std::vector<std::pair<int, int>> MatrixTwoForm::index_pairs(int ndim) {
  std::vector<std::pair<int, int>> pairs;
  for (int mu = 0; mu < ndim; ++mu)
    for (int nu = mu + 1; nu < ndim; ++nu) pairs.emplace_back(mu, nu);
  return pairs;
}

int MatrixTwoForm::pair_index(int mu, int nu) const {
  for (size_t k = 0; k < pairs.size(); ++k) {
    if (pairs[k].first == mu && pairs[k].second == nu) return static_cast<int>(k);
  }
  throw std::invalid_argument("grid too small");
}

ComplexMatrix MatrixTwoForm::at(int mu, int nu, int flat_index) const {
  if (mu == nu) {
    const ComplexMatrix& any = comp.at(0).at(flat_index);
    return ComplexMatrix::Zero(any.rows(), any.cols());
  }
  if (mu < nu) return comp.at(pair_index(mu, nu)).at(flat_index);
  return -comp.at(pair_index(nu, mu)).at(flat_index);
}

std::vector<std::array<int, 3>> MatrixThreeForm::index_triples(int ndim) {
  std::vector<std::array<int, 3>> triples;
  for (int mu = 0; mu < ndim; ++mu)
    for (int nu = mu + 1; nu < ndim; ++nu)
      for (int sg = nu + 1; sg < ndim; ++sg) triples.push_back({mu, nu, sg});
  return triples;
}

MatrixTwoForm exterior_d(const MatrixOneForm& w) {
  MatrixTwoForm b = blank_two_form(w.chart_id, w.grid);
  std::vector<std::vector<ComplexMatrix>> dcomp(w.comp.size() * w.comp.size());
  // dcomp[mu * d + nu] = D_mu W_nu, computed lazily below.
  const int d = w.ndim();
  std::vector<std::vector<std::vector<ComplexMatrix>>> deriv(d);
  for (int mu = 0; mu < d; ++mu) {
    deriv[mu].resize(d);
    for (int nu = 0; nu < d; ++nu) deriv[mu][nu] = grid_derivative(w.comp[nu], w.grid, mu);
  }
  for (size_t k = 0; k < b.pairs.size(); ++k) {
    const int mu = b.pairs[k].first, nu = b.pairs[k].second;
    const int n = w.grid.size();
    b.comp[k].resize(n);
    for (int s = 0; s < n; ++s) b.comp[k][s] = deriv[mu][nu][s] - deriv[nu][mu][s];
  }
  return b;
}

MatrixThreeForm exterior_d(const MatrixTwoForm& bform) {
  MatrixThreeForm t = blank_three_form(bform.chart_id, bform.grid);
  const int n = bform.grid.size();
  for (size_t k = 0; k < t.triples.size(); ++k) {
    const int mu = t.triples[k][0], nu = t.triples[k][1], sg = t.triples[k][2];
    const auto d_mu = grid_derivative(bform.comp[bform.pair_index(nu, sg)], bform.grid, mu);
    const auto d_nu = grid_derivative(bform.comp[bform.pair_index(mu, sg)], bform.grid, nu);
    const auto d_sg = grid_derivative(bform.comp[bform.pair_index(mu, nu)], bform.grid, sg);
    t.comp[k].resize(n);
    for (int s = 0; s < n; ++s) t.comp[k][s] = d_mu[s] - d_nu[s] + d_sg[s];
  }
  return t;
}

MatrixTwoForm wedge(const MatrixOneForm& a, const MatrixOneForm& b) {
  MatrixTwoForm out = blank_two_form(a.chart_id, a.grid);
  const int n = a.grid.size();
  for (size_t k = 0; k < out.pairs.size(); ++k) {
    const int mu = out.pairs[k].first, nu = out.pairs[k].second;
    out.comp[k].resize(n);
    for (int s = 0; s < n; ++s) {
      out.comp[k][s] = a.comp[mu][s] * b.comp[nu][s] - a.comp[nu][s] * b.comp[mu][s];
    }
  }
  return out;
}

MatrixTwoForm graded_comm(const MatrixOneForm& a, const MatrixOneForm& b) {
  MatrixTwoForm out = blank_two_form(a.chart_id, a.grid);
  const int n = a.grid.size();
  for (size_t k = 0; k < out.pairs.size(); ++k) {
    const int mu = out.pairs[k].first, nu = out.pairs[k].second;
    out.comp[k].resize(n);
    for (int s = 0; s < n; ++s) {
      out.comp[k][s] = a.comp[mu][s] * b.comp[nu][s] - a.comp[nu][s] * b.comp[mu][s] +
                       b.comp[mu][s] * a.comp[nu][s] - b.comp[nu][s] * a.comp[mu][s];
    }
  }
  return out;
}

MatrixThreeForm comm_one_two(const MatrixOneForm& a, const MatrixTwoForm& b) {
  MatrixThreeForm out = blank_three_form(a.chart_id, a.grid);
  const int n = a.grid.size();
  for (size_t k = 0; k < out.triples.size(); ++k) {
    const int mu = out.triples[k][0], nu = out.triples[k][1], sg = out.triples[k][2];
    out.comp[k].resize(n);
    for (int s = 0; s < n; ++s) {
      const ComplexMatrix a_wedge_b = a.comp[mu][s] * b.at(nu, sg, s) -
                                      a.comp[nu][s] * b.at(mu, sg, s) +
                                      a.comp[sg][s] * b.at(mu, nu, s);
      const ComplexMatrix b_wedge_a = b.at(mu, nu, s) * a.comp[sg][s] -
                                      b.at(mu, sg, s) * a.comp[nu][s] +
                                      b.at(nu, sg, s) * a.comp[mu][s];
      out.comp[k][s] = a_wedge_b - b_wedge_a;
    }
  }
  return out;
}

SectionField build_section_field(const MatFamily& h, const MatFamily& e0,
                                 const BranchSelector& sel, const ParamGrid& grid,
                                 int n_s, int n_e,
                                 const SectionFamily& phase_reference,
                                 const std::string& chart_id) {
  grid.validate();
  SectionField field;
  field.chart_id = chart_id;
  field.grid = grid;
  const int n = grid.size();
  field.recs.reserve(n);
  if (phase_reference) {
    for (int s = 0; s < n; ++s) {
      const RealVector x = grid.point_flat(s);
      BranchSelector ps = sel;
      ps.reference = phase_reference(x);
      field.recs.push_back(build_eigen_record(h, e0, ps, x, n_s, n_e));
    }
    return field;
  }
  for (int s = 0; s < n; ++s) {
    const std::vector<int> idx = grid.unflat(s);
    BranchSelector ps = sel;
    if (s > 0) {
      int pred = -1;
      for (int j = 0; j < grid.ndim(); ++j) {
        if (idx[j] > 0) {
          pred = s - grid.stride(j);
          break;
        }
      }
      ps.reference = field.recs[pred].phi;
    }
    field.recs.push_back(build_eigen_record(h, e0, ps, grid.point_flat(s), n_s, n_e));
  }
  return field;
}

ComplexMatrix solve_generator_equation(const ComplexMatrix& m, const ComplexMatrix& rho,
                                       const GeneratorOptions& opts) {
  const RangeSplit split = range_split(rho, opts.rank_tol);
  const int n = static_cast<int>(rho.rows());
  if (split.rank < n) {
    ComplexMatrix p_ker = ComplexMatrix::Zero(n, n);
    for (int c = split.rank; c < n; ++c) {
      p_ker += split.q.col(c) * split.q.col(c).adjoint();
    }
    if ((m * p_ker).norm() > opts.solve_tol * std::max(1.0, m.norm())) {
      throw std::runtime_error("no solution: inconsistent right-hand side");
    }
  }
  return m * pinv(rho, opts.rank_tol);
}

std::vector<ComplexMatrix> generator_from_section(const SectionField& field, int mu,
                                                  const GeneratorOptions& opts) {
  check_constant_rank(field, opts.rank_tol);
  const auto damps = grid_derivative(amplitude_field(field), field.grid, mu);
  std::vector<ComplexMatrix> out(field.recs.size());
  for (size_t s = 0; s < field.recs.size(); ++s) {
    const EigenRecord& rec = field.recs[s];
    const BipartiteVector dphi(rec.phi.n_s, rec.phi.n_e, ComplexVector(damps[s].col(0)));
    out[s] = solve_generator_equation(star_inner(rec.phi, dphi), rec.rho, opts);
  }
  return out;
}

MatrixOneForm generator_one_form(const SectionField& field, const GeneratorOptions& opts) {
  MatrixOneForm w = blank_one_form(field.chart_id, field.grid);
  for (int mu = 0; mu < field.grid.ndim(); ++mu) {
    w.comp[mu] = generator_from_section(field, mu, opts);
  }
  return w;
}

std::vector<ComplexMatrix> breve_generator(const std::vector<ComplexMatrix>& rho_field,
                                           const ParamGrid& grid, int mu,
                                           const GeneratorOptions& opts) {
  for (const auto& rho : rho_field) {
    const RangeSplit split = range_split(rho, opts.rank_tol);
    if (split.rank < rho.rows()) {
      throw std::runtime_error("breve generator undefined; use generator_from_section");
    }
  }
  const auto drho = grid_derivative(rho_field, grid, mu);
  std::vector<ComplexMatrix> out(rho_field.size());
  for (size_t s = 0; s < rho_field.size(); ++s) {
    out[s] = 0.5 * drho[s] * small_inverse(rho_field[s], "breve generator undefined; use generator_from_section");
  }
  return out;
}

std::pair<std::vector<ComplexMatrix>, std::vector<ComplexMatrix>> split_generator_component(
    const SectionField& field, const MatFamily& h, int mu, const GeneratorOptions& opts) {
  check_constant_rank(field, opts.rank_tol);
  const auto damps = grid_derivative(amplitude_field(field), field.grid, mu);
  const size_t n = field.recs.size();
  std::vector<ComplexMatrix> a(n), r(n);
  for (size_t s = 0; s < n; ++s) {
    const EigenRecord& rec = field.recs[s];
    const ComplexMatrix hx = h(rec.x);
    const ComplexMatrix p =
        eigenspace_projector(hx, rec.e0, rec.lambda, rec.phi.n_s, rec.phi.n_e);
    const ComplexVector dphi = damps[s].col(0);
    const BipartiteVector tangent(rec.phi.n_s, rec.phi.n_e, ComplexVector(p * dphi));
    const BipartiteVector normal(rec.phi.n_s, rec.phi.n_e,
                                 ComplexVector(dphi - p * dphi));
    a[s] = solve_generator_equation(star_inner(rec.phi, tangent), rec.rho, opts);
    r[s] = solve_generator_equation(star_inner(rec.phi, normal), rec.rho, opts);
  }
  return {a, r};
}

SplitGenerator split_generator(const SectionField& field, const MatFamily& h,
                               const GeneratorOptions& opts) {
  SplitGenerator out;
  out.reduced = blank_one_form(field.chart_id, field.grid);
  out.remainder = blank_one_form(field.chart_id, field.grid);
  for (int mu = 0; mu < field.grid.ndim(); ++mu) {
    auto [a, r] = split_generator_component(field, h, mu, opts);
    out.reduced.comp[mu] = std::move(a);
    out.remainder.comp[mu] = std::move(r);
  }
  return out;
}

MatrixOneForm gauge_transform_generator(const MatrixOneForm& w,
                                        const std::vector<ComplexMatrix>& g_field,
                                        const MatrixOneForm* eta) {
  if (static_cast<int>(g_field.size()) != w.grid.size()) {
    throw std::invalid_argument("grid too small");
  }
  MatrixOneForm out = blank_one_form(w.chart_id, w.grid);
  const int n = w.grid.size();
  std::vector<ComplexMatrix> ginv(n);
  for (int s = 0; s < n; ++s) ginv[s] = small_inverse(g_field[s], "singular g");
  for (int mu = 0; mu < w.ndim(); ++mu) {
    const auto dg = grid_derivative(g_field, w.grid, mu);
    out.comp[mu].resize(n);
    for (int s = 0; s < n; ++s) {
      ComplexMatrix t = g_field[s] * w.comp[mu][s] * ginv[s] + dg[s] * ginv[s];
      if (eta != nullptr && !eta->comp.empty()) {
        t += g_field[s] * eta->comp[mu][s] * ginv[s];
      }
      out.comp[mu][s] = std::move(t);
    }
  }
  return out;
}

ComplexMatrix j_part(const ComplexMatrix& x, const ComplexMatrix& rho, double rank_tol) {
  const RangeSplit split = range_split(rho, rank_tol);
  const int n = static_cast<int>(rho.rows());
  const int r = split.rank;
  const ComplexMatrix xh = split.q.adjoint() * x * split.q;
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  if (r > 0) {
    const ComplexMatrix x11 = xh.topLeftCorner(r, r);
    const ComplexMatrix p = split.range_p.asDiagonal();
    const ComplexMatrix p_inv =
        split.range_p.cwiseInverse().matrix().asDiagonal();
    d.topLeftCorner(r, r) = 0.5 * (x11 - p * x11.adjoint() * p_inv);
  }
  if (r < n) {
    d.topRightCorner(r, n - r) = xh.topRightCorner(r, n - r);
    d.bottomRightCorner(n - r, n - r) = xh.bottomRightCorner(n - r, n - r);
  }
  return split.q * d * split.q.adjoint();
}

CurvatureData curvatures(const MatrixOneForm& full, const MatrixOneForm& reduced,
                         const MatrixOneForm& remainder) {
  full.grid.validate();
  CurvatureData out;
  {
    MatrixTwoForm d_full = exterior_d(full);
    const MatrixTwoForm ww = wedge(full, full);
    for (size_t k = 0; k < d_full.comp.size(); ++k)
      for (size_t s = 0; s < d_full.comp[k].size(); ++s)
        d_full.comp[k][s] -= ww.comp[k][s];
    out.curving = std::move(d_full);
  }
  {
    MatrixTwoForm d_rem = exterior_d(remainder);
    const MatrixTwoForm ar = graded_comm(reduced, remainder);
    const MatrixTwoForm rr = wedge(remainder, remainder);
    for (size_t k = 0; k < d_rem.comp.size(); ++k)
      for (size_t s = 0; s < d_rem.comp[k].size(); ++s)
        d_rem.comp[k][s] -= ar.comp[k][s] + rr.comp[k][s];
    out.fake = std::move(d_rem);
  }
  if (full.grid.ndim() >= 3) {
    out.has_three_form = true;
    {
      MatrixThreeForm db = exterior_d(out.curving);
      const MatrixThreeForm ab = comm_one_two(reduced, out.curving);
      for (size_t k = 0; k < db.comp.size(); ++k)
        for (size_t s = 0; s < db.comp[k].size(); ++s) db.comp[k][s] -= ab.comp[k][s];
      out.true_from_curving = std::move(db);
    }
    {
      MatrixThreeForm df = exterior_d(out.fake);
      const MatrixThreeForm af = comm_one_two(reduced, out.fake);
      for (size_t k = 0; k < df.comp.size(); ++k)
        for (size_t s = 0; s < df.comp[k].size(); ++s) df.comp[k][s] -= af.comp[k][s];
      out.true_from_fake = std::move(df);
    }
  }
  return out;
}

double curving_j_residual(const MatrixTwoForm& b, const SectionField& field) {
  double worst = 0.0;
  for (size_t k = 0; k < b.comp.size(); ++k) {
    for (size_t s = 0; s < b.comp[k].size(); ++s) {
      const ComplexMatrix& rho = field.recs[s].rho;
      worst = std::max(worst, (b.comp[k][s] * rho + rho * b.comp[k][s].adjoint()).norm());
    }
  }
  return worst;
}

std::vector<ChartForms> atlas_forms(const ChartAtlas& atlas, const MatFamily& h,
                                    const GeneratorOptions& opts) {
  std::vector<ChartForms> forms;
  forms.reserve(atlas.charts.size());
  for (const auto& field : atlas.charts) {
    ChartForms f;
    f.full = generator_one_form(field, opts);
    SplitGenerator split = split_generator(field, h, opts);
    f.reduced = std::move(split.reduced);
    f.remainder = std::move(split.remainder);
    CurvatureData curv = curvatures(f.full, f.reduced, f.remainder);
    f.curving = std::move(curv.curving);
    f.fake = std::move(curv.fake);
    forms.push_back(std::move(f));
  }
  return forms;
}

AtlasTransitions transition_functions(const ChartAtlas& atlas,
                                      const std::vector<ChartForms>& forms,
                                      const GeneratorOptions& opts) {
  const int nc = static_cast<int>(atlas.charts.size());
  const int n = atlas.grid.size();
  const int d = atlas.grid.ndim();
  if (nc == 0 || forms.size() != atlas.charts.size() ||
      atlas.g.size() != atlas.charts.size()) {
    throw std::invalid_argument("grid too small");
  }
  AtlasTransitions out;

  // Inverses of the supplied pairwise transitions.
  std::vector<std::vector<std::vector<ComplexMatrix>>> ginv(nc);
  for (int a = 0; a < nc; ++a) {
    ginv[a].resize(nc);
    for (int b = 0; b < nc; ++b) {
      ginv[a][b].resize(n);
      for (int s = 0; s < n; ++s) ginv[a][b][s] = small_inverse(atlas.g[a][b][s], "singular g");
    }
  }

  // Triple products h^{abc} = g^{ab} g^{bc} g^{ca}.
  out.h.assign(nc, std::vector<std::vector<std::vector<ComplexMatrix>>>(
                       nc, std::vector<std::vector<ComplexMatrix>>(nc)));
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b)
      for (int c = 0; c < nc; ++c) {
        out.h[a][b][c].resize(n);
        for (int s = 0; s < n; ++s) {
          out.h[a][b][c][s] = atlas.g[a][b][s] * atlas.g[b][c][s] * atlas.g[c][a][s];
        }
      }

  // Pairwise potential-transformations.
  out.eta.assign(nc, std::vector<MatrixOneForm>(nc));
  for (int a = 0; a < nc; ++a) {
    for (int b = 0; b < nc; ++b) {
      out.eta[a][b] = blank_one_form(atlas.ids[a] + ":" + atlas.ids[b], atlas.grid);
      if (a == b) continue;
      for (int mu = 0; mu < d; ++mu) {
        const auto dg = grid_derivative(atlas.g[a][b], atlas.grid, mu);
        out.eta[a][b].comp[mu].resize(n);
        for (int s = 0; s < n; ++s) {
          const ComplexMatrix combo = atlas.g[a][b][s] * forms[b].full.comp[mu][s] * ginv[a][b][s] -
                                      forms[a].full.comp[mu][s] + dg[s] * ginv[a][b][s];
          out.eta[a][b].comp[mu][s] =
              j_part(combo, atlas.charts[a].recs[s].rho, opts.rank_tol);
          out.report.eta_extraction =
              std::max(out.report.eta_extraction,
                       (combo - out.eta[a][b].comp[mu][s]).norm());
        }
      }
    }
  }

  TransitionReport& rep = out.report;

  for (int a = 0; a < nc; ++a) {
    for (int b = 0; b < nc; ++b) {
      if (a == b) continue;
      for (int s = 0; s < n; ++s) {
        const ComplexMatrix& ra = atlas.charts[a].recs[s].rho;
        const ComplexMatrix& rb = atlas.charts[b].recs[s].rho;
        rep.rho_consistency = std::max(
            rep.rho_consistency,
            (ra - atlas.g[a][b][s] * rb * atlas.g[a][b][s].adjoint()).norm());
      }
      for (int mu = 0; mu < d; ++mu) {
        for (int s = 0; s < n; ++s) {
          const ComplexMatrix& rho = atlas.charts[a].recs[s].rho;
          const ComplexMatrix& eta = out.eta[a][b].comp[mu][s];
          rep.eta_j_residual = std::max(rep.eta_j_residual,
                                        (eta * rho + rho * eta.adjoint()).norm());
        }
      }
    }
  }

  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b)
      for (int c = 0; c < nc; ++c) {
        if (a == b || b == c || a == c) continue;
        std::vector<std::vector<ComplexMatrix>> dh(d);
        for (int mu = 0; mu < d; ++mu) dh[mu] = grid_derivative(out.h[a][b][c], atlas.grid, mu);
        for (int s = 0; s < n; ++s) {
          const ComplexMatrix& h_abc = out.h[a][b][c][s];
          const ComplexMatrix h_inv = small_inverse(h_abc, "singular g");
          rep.cocycle_conj = std::max(
              rep.cocycle_conj,
              (h_abc - atlas.g[a][b][s] * out.h[b][c][a][s] * ginv[a][b][s]).norm());
          rep.cocycle_inv =
              std::max(rep.cocycle_inv, (out.h[a][c][b][s] - h_inv).norm());
          rep.cocycle_swap = std::max(
              rep.cocycle_swap,
              (out.h[b][a][c][s] - ginv[a][b][s] * h_inv * atlas.g[a][b][s]).norm());
          const ComplexMatrix& rho_a = atlas.charts[a].recs[s].rho;
          rep.h_fixes_rho = std::max(rep.h_fixes_rho,
                                     (h_abc * rho_a * h_abc.adjoint() - rho_a).norm());
          for (int mu = 0; mu < d; ++mu) {
            const ComplexMatrix lhs =
                out.eta[a][b].comp[mu][s] +
                atlas.g[a][b][s] * out.eta[b][c].comp[mu][s] * ginv[a][b][s] -
                h_abc * out.eta[a][c].comp[mu][s] * h_inv;
            const ComplexMatrix& w_mu = forms[a].full.comp[mu][s];
            const ComplexMatrix rhs =
                dh[mu][s] * h_inv - (w_mu * h_abc - h_abc * w_mu) * h_inv;
            rep.eta_cocycle = std::max(rep.eta_cocycle, (lhs - rhs).norm());
          }
        }
      }

  if (nc >= 4) {
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b)
        for (int c = 0; c < nc; ++c)
          for (int e = 0; e < nc; ++e) {
            if (a == b || a == c || a == e || b == c || b == e || c == e) continue;
            for (int s = 0; s < n; ++s) {
              const ComplexMatrix lhs = out.h[a][e][c][s] * out.h[a][c][b][s];
              const ComplexMatrix rhs = out.h[a][e][b][s] * atlas.g[a][b][s] *
                                        out.h[b][e][c][s] * ginv[a][b][s];
              rep.cocycle_quad = std::max(rep.cocycle_quad, (lhs - rhs).norm());
            }
          }
  }
  return out;
}

GaugeLawChecks curvature_gauge_check(const ChartAtlas& atlas,
                                     const std::vector<ChartForms>& forms,
                                     const AtlasTransitions& transitions) {
  const int nc = static_cast<int>(atlas.charts.size());
  const int n = atlas.grid.size();
  GaugeLawChecks checks;
  if (atlas.grid.ndim() < 2) return checks;  // no two-forms on a line

  // chi[a][b] = [R^a, eta^{ab}] as a two-form.
  std::vector<std::vector<MatrixTwoForm>> chi(nc, std::vector<MatrixTwoForm>(nc));
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b) {
      if (a == b) continue;
      chi[a][b] = graded_comm(forms[a].remainder, transitions.eta[a][b]);
    }

  for (int a = 0; a < nc; ++a) {
    for (int b = 0; b < nc; ++b) {
      if (a == b) continue;
      const MatrixTwoForm d_eta = exterior_d(transitions.eta[a][b]);
      const MatrixTwoForm eta_eta = wedge(transitions.eta[a][b], transitions.eta[a][b]);
      const MatrixTwoForm a_eta = graded_comm(forms[a].reduced, transitions.eta[a][b]);
      for (size_t k = 0; k < d_eta.comp.size(); ++k) {
        for (int s = 0; s < n; ++s) {
          const ComplexMatrix g = atlas.g[a][b][s];
          const ComplexMatrix gi = small_inverse(g, "singular g");
          const ComplexMatrix bracket = forms[a].curving.comp[k][s] + d_eta.comp[k][s] -
                                        eta_eta.comp[k][s] - a_eta.comp[k][s] -
                                        chi[a][b].comp[k][s];
          checks.curving_law =
              std::max(checks.curving_law,
                       (forms[b].curving.comp[k][s] - gi * bracket * g).norm());
          checks.fake_law = std::max(
              checks.fake_law,
              (forms[b].fake.comp[k][s] -
               gi * (forms[a].fake.comp[k][s] - chi[a][b].comp[k][s]) * g).norm());
        }
      }
    }
  }

  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b)
      for (int c = 0; c < nc; ++c) {
        if (a == b || b == c || a == c) continue;
        for (size_t k = 0; k < chi[a][b].comp.size(); ++k) {
          for (int s = 0; s < n; ++s) {
            const ComplexMatrix g = atlas.g[a][b][s];
            const ComplexMatrix gi = small_inverse(g, "singular g");
            const ComplexMatrix& h = transitions.h[a][b][c][s];
            const ComplexMatrix hi = small_inverse(h, "singular g");
            const ComplexMatrix& f_a = forms[a].fake.comp[k][s];
            const ComplexMatrix lhs = chi[a][b].comp[k][s] +
                                      g * chi[b][c].comp[k][s] * gi -
                                      h * chi[a][c].comp[k][s] * hi;
            const ComplexMatrix rhs = -h * (f_a * hi - hi * f_a);
            checks.chi_cocycle = std::max(checks.chi_cocycle, (lhs - rhs).norm());
          }
        }
      }
  return checks;
}

}  // namespace cstar
