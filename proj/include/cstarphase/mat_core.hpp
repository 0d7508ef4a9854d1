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

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cstar {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Throws std::runtime_error if any entry is NaN or infinite.
void ensure_finite(const ComplexMatrix& m, const char* context);

/// Spectral norm (largest singular value).
double op_norm(const ComplexMatrix& m);

/// Kronecker product a (x) b, row-major composite indices.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Identity of size n.
ComplexMatrix ident(Eigen::Index n);

/// Validates that a square operator of the given size factors over
/// S (x) E with dim S = n_s, dim E = n_e; throws "bad bipartite shape".
void check_bipartite(Eigen::Index rows, Eigen::Index cols, int n_s, int n_e);

/// Trace over the environment factor. Composite index (i_s, i_e) -> i_s * n_e + i_e.
ComplexMatrix partial_trace_env(const ComplexMatrix& m, int n_s, int n_e);

struct HermEig {
  RealVector values;      // ascending
  ComplexMatrix vectors;  // orthonormal columns, matching order
};

/// Eigendecomposition of a Hermitian matrix. The Hermiticity defect
/// ||m - m*|| must stay below herm_tol * max(1, ||m||); otherwise throws
/// "not Hermitian".
HermEig herm_eig(const ComplexMatrix& m, double herm_tol = 1e-10);

/// Matrix exponential (scaling-and-squaring Pade).
ComplexMatrix matrix_exp(const ComplexMatrix& m);

/// Moore-Penrose pseudoinverse; singular values below rank_tol * sigma_max
/// are treated as zero.
ComplexMatrix pinv(const ComplexMatrix& m, double rank_tol = 1e-12);

/// Pure state of a bipartite system S (x) E with the composite index
/// convention (i_s, i_e) -> i_s * n_e + i_e.
struct BipartiteVector {
  int n_s = 0;
  int n_e = 0;
  ComplexVector amp;

  BipartiteVector() = default;
  BipartiteVector(int ns, int ne);
  BipartiteVector(int ns, int ne, ComplexVector a);

  Eigen::Index dim() const { return amp.size(); }
  Complex& at(int i_s, int i_e) { return amp(static_cast<Eigen::Index>(i_s) * n_e + i_e); }
  Complex at(int i_s, int i_e) const { return amp(static_cast<Eigen::Index>(i_s) * n_e + i_e); }
  double norm() const { return amp.norm(); }
  bool is_normalized(double tol = 1e-12) const { return std::abs(norm() - 1.0) <= tol; }
  bool empty() const { return amp.size() == 0; }
};

/// Full Hilbert-space inner product <<a|b>> (antilinear in a).
Complex overlap(const BipartiteVector& a, const BipartiteVector& b);

/// Applies a universe operator to a state.
BipartiteVector apply_universe(const ComplexMatrix& op, const BipartiteVector& v);

/// Applies a system operator, o (x) 1.
BipartiteVector apply_system(const ComplexMatrix& o, const BipartiteVector& v);

}  // namespace cstar
