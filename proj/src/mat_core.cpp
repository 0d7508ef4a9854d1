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

#include "cstarphase/mat_core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace cstar {

void ensure_finite(const ComplexMatrix& m, const char* context) {
  if (!m.allFinite()) {
    throw std::runtime_error(std::string("non-finite entries in ") + context);
  }
}

double op_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  ensure_finite(out, "kron");
  return out;
}

ComplexMatrix ident(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

void check_bipartite(Eigen::Index rows, Eigen::Index cols, int n_s, int n_e) {
  const Eigen::Index dim = static_cast<Eigen::Index>(n_s) * n_e;
  if (n_s <= 0 || n_e <= 0 || rows != cols || rows != dim) {
    throw std::invalid_argument("bad bipartite shape");
  }
}

ComplexMatrix partial_trace_env(const ComplexMatrix& m, int n_s, int n_e) {
  check_bipartite(m.rows(), m.cols(), n_s, n_e);
  ComplexMatrix out = ComplexMatrix::Zero(n_s, n_s);
  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < n_s; ++j) {
      Complex acc{0.0, 0.0};
      for (int k = 0; k < n_e; ++k) {
        acc += m(static_cast<Eigen::Index>(i) * n_e + k, static_cast<Eigen::Index>(j) * n_e + k);
      }
      out(i, j) = acc;
    }
  }
  ensure_finite(out, "partial_trace_env");
  return out;
}

HermEig herm_eig(const ComplexMatrix& m, double herm_tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("not Hermitian");
  const double defect = (m - m.adjoint()).norm();
  if (defect > herm_tol * std::max(1.0, m.norm())) {
    throw std::invalid_argument("not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  HermEig out{solver.eigenvalues(), solver.eigenvectors()};
  ensure_finite(out.vectors, "herm_eig");
  return out;
}

ComplexMatrix matrix_exp(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix_exp needs a square matrix");
  ComplexMatrix out = m.exp();
  ensure_finite(out, "matrix_exp");
  return out;
}

ComplexMatrix pinv(const ComplexMatrix& m, double rank_tol) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = rank_tol * (sv.size() > 0 ? sv(0) : 0.0);
  RealVector inv = RealVector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
  }
  ComplexMatrix out = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
  ensure_finite(out, "pinv");
  return out;
}

BipartiteVector::BipartiteVector(int ns, int ne) : n_s(ns), n_e(ne) {
  if (ns <= 0 || ne <= 0) throw std::invalid_argument("bad bipartite shape");
  amp = ComplexVector::Zero(static_cast<Eigen::Index>(ns) * ne);
}

BipartiteVector::BipartiteVector(int ns, int ne, ComplexVector a) : n_s(ns), n_e(ne), amp(std::move(a)) {
  if (ns <= 0 || ne <= 0 || amp.size() != static_cast<Eigen::Index>(ns) * ne) {
    throw std::invalid_argument("bad bipartite shape");
  }
}

Complex overlap(const BipartiteVector& a, const BipartiteVector& b) {
  if (a.n_s != b.n_s || a.n_e != b.n_e) throw std::invalid_argument("bad bipartite shape");
  return a.amp.dot(b.amp);
}

BipartiteVector apply_universe(const ComplexMatrix& op, const BipartiteVector& v) {
  check_bipartite(op.rows(), op.cols(), v.n_s, v.n_e);
  return BipartiteVector(v.n_s, v.n_e, op * v.amp);
}

BipartiteVector apply_system(const ComplexMatrix& o, const BipartiteVector& v) {
  if (o.rows() != v.n_s || o.cols() != v.n_s) throw std::invalid_argument("bad bipartite shape");
  BipartiteVector out(v.n_s, v.n_e);
  for (int i = 0; i < v.n_s; ++i) {
    for (int j = 0; j < v.n_s; ++j) {
      if (o(i, j) == Complex{0.0, 0.0}) continue;
      for (int k = 0; k < v.n_e; ++k) {
        out.at(i, k) += o(i, j) * v.at(j, k);
      }
    }
  }
  return out;
}

}  // namespace cstar
