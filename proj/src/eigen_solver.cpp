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

#include "cstarphase/eigen_solver.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace cstar {

namespace {

ComplexMatrix ambient(const ComplexMatrix& e0, int n_e) {
  return kron(e0, ident(n_e));
}

ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

// Fix the free overall phase of an eigenvector deterministically: rotate the
// largest-magnitude entry to the positive real axis.
void canonical_phase(ComplexVector& v) {
  int imax = 0;
  double best = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    const double m = std::abs(v(i));
    if (m > best) {
      best = m;
      imax = i;
    }
  }
  if (best > 0.0) v *= std::conj(v(imax)) / best;
}

// Rotate phi so that <<ref|phi>> is real positive; returns the overlap
// magnitude (0 if the reference is empty).
double align_phase(const BipartiteVector& ref, BipartiteVector& phi) {
  const Complex z = overlap(ref, phi);
  const double m = std::abs(z);
  if (m > 0.0) phi.amp *= std::conj(z) / m;
  return m;
}

bool spectrum_degenerate(const RealVector& lambdas, int idx, double deg_tol) {
  const double span = std::max(lambdas.maxCoeff() - lambdas.minCoeff(), 1.0);
  for (int i = 0; i < lambdas.size(); ++i) {
    if (i == idx) continue;
    if (std::abs(lambdas(i) - lambdas(idx)) <= deg_tol * span) return true;
  }
  return false;
}

EigenRecord assemble_record(const RealVector& x, const ComplexMatrix& e0,
                            const StarEigenSystem& sys, int idx,
                            BipartiteVector phi, double deg_tol) {
  EigenRecord rec;
  rec.x = x;
  rec.e0 = e0;
  rec.lambda = sys.lambdas(idx);
  rec.phi = std::move(phi);
  rec.e = e0 + rec.lambda * ident(static_cast<int>(e0.rows()));
  rec.rho = star_inner(rec.phi, rec.phi);
  rec.possibly_degenerate = spectrum_degenerate(sys.lambdas, idx, deg_tol);
  return rec;
}

}  // namespace

std::vector<ComplexMatrix> commutant_basis(const ComplexMatrix& h, int n_s,
                                           int n_e, double tol) {
  check_bipartite(h.rows(), h.cols(), n_s, n_e);
  const int dim_coeff = n_s * n_s;
  const int dim_univ = n_s * n_e;
  ComplexMatrix map(dim_univ * dim_univ, dim_coeff);
  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < n_s; ++j) {
      ComplexMatrix unit = ComplexMatrix::Zero(n_s, n_s);
      unit(i, j) = 1.0;
      const ComplexMatrix comm = commutator(ambient(unit, n_e), h);
      map.col(i * n_s + j) =
          Eigen::Map<const ComplexVector>(comm.data(), comm.size());
    }
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(map, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = tol * (sv.size() > 0 ? sv(0) : 0.0);
  std::vector<ComplexMatrix> raw;
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) <= cut) {
      ComplexVector coeff = svd.matrixV().col(k);
      // Coefficient layout matches the column construction above: entry
      // i*n_s + j multiplies the unit matrix with a 1 at (i, j).
      ComplexMatrix b(n_s, n_s);
      for (int i = 0; i < n_s; ++i)
        for (int j = 0; j < n_s; ++j) b(i, j) = coeff(i * n_s + j);
      raw.push_back(std::move(b));
    }
  }
  const size_t null_dim = raw.size() == 0 ? 1 : raw.size();

  // The commutant of a Hermitian H is adjoint-closed, so it has a basis of
  // Hermitian matrices: orthonormalize the Hermitian/anti-Hermitian parts of
  // the null vectors, seeded with the identity direction.
  std::vector<ComplexMatrix> candidates;
  candidates.push_back(ident(n_s));
  for (const auto& b : raw) {
    candidates.push_back(0.5 * (b + b.adjoint()));
    candidates.push_back(Complex(0.0, -0.5) * (b - b.adjoint()));
  }
  std::vector<ComplexMatrix> basis;
  for (auto& c : candidates) {
    ComplexMatrix v = c;
    for (const auto& b : basis) {
      const Complex proj = (b.adjoint() * v).trace();
      v -= proj * b;
    }
    const double nrm = v.norm();
    if (nrm > 1e-8) {
      basis.push_back(v / nrm);
      if (basis.size() == null_dim) break;
    }
  }
  return basis;
}

StarEigenSystem solve_star_eigen(const ComplexMatrix& h, const ComplexMatrix& e0,
                                 int n_s, int n_e, double seed_tol) {
  check_bipartite(h.rows(), h.cols(), n_s, n_e);
  if (e0.rows() != n_s || e0.cols() != n_s) throw std::invalid_argument("bad bipartite shape");
  if ((e0 - e0.adjoint()).norm() > seed_tol * std::max(1.0, e0.norm())) {
    throw std::invalid_argument("not an eigenoperator seed");
  }
  const ComplexMatrix lifted = ambient(e0, n_e);
  const double comm_scale = std::max(1.0, op_norm(h) * std::max(1.0, op_norm(e0)));
  if (op_norm(commutator(lifted, h)) > seed_tol * comm_scale) {
    throw std::invalid_argument("not an eigenoperator seed");
  }
  const HermEig eig = herm_eig(h - lifted);
  StarEigenSystem out;
  out.lambdas = eig.values;
  out.phis.reserve(eig.values.size());
  for (int k = 0; k < eig.values.size(); ++k) {
    ComplexVector v = eig.vectors.col(k);
    canonical_phase(v);
    out.phis.emplace_back(n_s, n_e, v);
  }
  return out;
}

BranchTracker::BranchTracker(MatFamily h, MatFamily e0, int n_s, int n_e,
                             BranchSelector sel)
    : h_(std::move(h)), e0_(std::move(e0)), n_s_(n_s), n_e_(n_e), sel_(std::move(sel)) {}

void BranchTracker::reset() {
  has_prev_ = false;
  prev_phi_ = BipartiteVector();
}

EigenRecord BranchTracker::record_at(const RealVector& x) {
  const ComplexMatrix e0 = e0_(x);
  const StarEigenSystem sys = solve_star_eigen(h_(x), e0, n_s_, n_e_);
  const int n = static_cast<int>(sys.phis.size());

  const BipartiteVector* ref = nullptr;
  if (has_prev_) {
    ref = &prev_phi_;
  } else if (!sel_.reference.empty()) {
    ref = &sel_.reference;
  }

  int idx = -1;
  BipartiteVector phi;
  if (ref != nullptr) {
    double best = -1.0;
    for (int k = 0; k < n; ++k) {
      const double m = std::abs(overlap(*ref, sys.phis[k]));
      if (m > best) {
        best = m;
        idx = k;
      }
    }
    if (idx < 0 || best < sel_.overlap_threshold) {
      throw std::runtime_error("branch tracking lost");
    }
    phi = sys.phis[idx];
    align_phase(*ref, phi);
  } else {
    idx = sel_.initial_branch;
    if (idx < 0 || idx >= n) throw std::invalid_argument("branch tracking lost");
    phi = sys.phis[idx];
  }

  EigenRecord rec = assemble_record(x, e0, sys, idx, std::move(phi), sel_.degeneracy_tol);
  prev_phi_ = rec.phi;
  has_prev_ = true;
  return rec;
}

EigenRecord build_eigen_record(const MatFamily& h, const MatFamily& e0,
                               const BranchSelector& sel, const RealVector& x,
                               int n_s, int n_e) {
  BranchTracker tracker(h, e0, n_s, n_e, sel);
  return tracker.record_at(x);
}

ComplexMatrix eigenspace_projector(const ComplexMatrix& h, const ComplexMatrix& e0,
                                   double lambda, int n_s, int n_e, double deg_tol) {
  check_bipartite(h.rows(), h.cols(), n_s, n_e);
  const HermEig eig = herm_eig(h - ambient(e0, n_e));
  const double span = std::max(eig.values.maxCoeff() - eig.values.minCoeff(), 1.0);
  const int dim = n_s * n_e;
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  for (int k = 0; k < eig.values.size(); ++k) {
    if (std::abs(eig.values(k) - lambda) <= std::max(deg_tol * span, 1e-12)) {
      p += eig.vectors.col(k) * eig.vectors.col(k).adjoint();
    }
  }
  return p;
}

double RecordValidation::max_residual() const {
  double m = eigen_residual;
  m = std::max(m, commutation_residual);
  m = std::max(m, trace_skew);
  m = std::max(m, lindblad_residual);
  m = std::max(m, second_order_residual);
  m = std::max(m, eigenspace_residual);
  m = std::max(m, density_defect);
  return m;
}

RecordValidation validate_eigen_record(const ComplexMatrix& h, const EigenRecord& rec,
                                       double deg_tol) {
  const int n_s = rec.phi.n_s;
  const int n_e = rec.phi.n_e;
  check_bipartite(h.rows(), h.cols(), n_s, n_e);
  RecordValidation rep;
  rep.possibly_degenerate = rec.possibly_degenerate;

  const double h_norm = std::max(op_norm(h), 1e-300);
  const double e_norm = std::max(op_norm(rec.e), 1e-300);
  const ComplexMatrix lifted = kron(rec.e, ident(n_e));

  rep.eigen_residual = (h * rec.phi.amp - lifted * rec.phi.amp).norm() / h_norm;
  rep.commutation_residual = op_norm(lifted * h - h * lifted) / (h_norm * e_norm);

  const ComplexMatrix skew = rec.e - rec.e.adjoint();
  rep.trace_skew = std::abs((rec.rho * skew).trace()) / e_norm;

  const ComplexMatrix l_rho = lindbladian_apply(h, rec.phi);
  rep.lindblad_residual =
      (l_rho - (rec.e * rec.rho - rec.rho * rec.e.adjoint())).norm() / h_norm;

  const ComplexMatrix proj = outer(rec.phi, rec.phi);
  const ComplexMatrix lifted_pair = lifted * proj - proj * lifted.adjoint();
  const ComplexMatrix lhs = lindbladian_apply(h, lifted_pair, n_s, n_e);
  const ComplexMatrix rhs = rec.e * l_rho - l_rho * rec.e.adjoint();
  rep.second_order_residual = (lhs - rhs).norm() / (h_norm * std::max(1.0, e_norm));

  const ComplexMatrix p =
      eigenspace_projector(h, rec.e0, rec.lambda, n_s, n_e, deg_tol);
  const ComplexVector lifted_phi = lifted * rec.phi.amp;
  rep.eigenspace_residual =
      (lifted_phi - p * lifted_phi).norm() / std::max(1.0, e_norm);

  rep.density_defect = density_defect(rec.rho);
  return rep;
}

}  // namespace cstar
