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

#include "cstarphase/cstar_module.hpp"

#include <cmath>

namespace cstar {

ComplexMatrix star_inner(const BipartiteVector& psi, const BipartiteVector& phi) {
  if (psi.n_s != phi.n_s || psi.n_e != phi.n_e) throw std::invalid_argument("bad bipartite shape");
  const int ns = psi.n_s, ne = psi.n_e;
  ComplexMatrix out(ns, ns);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < ns; ++j) {
      Complex acc{0.0, 0.0};
      for (int k = 0; k < ne; ++k) {
        acc += phi.at(i, k) * std::conj(psi.at(j, k));
      }
      out(i, j) = acc;
    }
  }
  ensure_finite(out, "star_inner");
  return out;
}

ComplexMatrix star_norm_sq(const BipartiteVector& psi, double norm_tol) {
  if (std::abs(psi.norm() - 1.0) > norm_tol) {
    throw std::invalid_argument("unnormalized input");
  }
  return star_inner(psi, psi);
}

ComplexMatrix outer(const BipartiteVector& a, const BipartiteVector& b) {
  if (a.n_s != b.n_s || a.n_e != b.n_e) throw std::invalid_argument("bad bipartite shape");
  return a.amp * b.amp.adjoint();
}

ComplexMatrix lindbladian_apply(const ComplexMatrix& h, const BipartiteVector& psi) {
  check_bipartite(h.rows(), h.cols(), psi.n_s, psi.n_e);
  return lindbladian_apply(h, outer(psi, psi), psi.n_s, psi.n_e);
}

ComplexMatrix lindbladian_apply(const ComplexMatrix& h, const ComplexMatrix& universe_op, int n_s, int n_e) {
  check_bipartite(h.rows(), h.cols(), n_s, n_e);
  check_bipartite(universe_op.rows(), universe_op.cols(), n_s, n_e);
  return partial_trace_env(h * universe_op - universe_op * h, n_s, n_e);
}

double density_defect(const ComplexMatrix& rho) {
  if (rho.rows() != rho.cols()) return std::numeric_limits<double>::infinity();
  double defect = (rho - rho.adjoint()).norm();
  defect = std::max(defect, std::abs(rho.trace() - Complex{1.0, 0.0}));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> s(ComplexMatrix(0.5 * (rho + rho.adjoint())));
  if (s.info() == Eigen::Success && s.eigenvalues().size() > 0) {
    defect = std::max(defect, std::max(0.0, -s.eigenvalues().minCoeff()));
  }
  return defect;
}

DensityMatrix DensityMatrix::make(const ComplexMatrix& m, double tol) {
  if (density_defect(m) > tol) throw std::invalid_argument("not a density operator");
  return DensityMatrix{m};
}

double j_residual(const ComplexMatrix& d, const ComplexMatrix& rho) {
  return (d * rho + rho * d.adjoint()).norm();
}

}  // namespace cstar
