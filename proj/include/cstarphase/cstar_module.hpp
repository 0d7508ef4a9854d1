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

#include "cstarphase/mat_core.hpp"

namespace cstar {

// The algebra-valued inner product on universe states, taking values in the
// system operators:
//
//     <psi|phi>_*  =  tr_E |phi>><<psi| ,
//     (<psi|phi>_*)(i, j) = sum_k phi(i, k) conj(psi(j, k)).
//
// It is linear in phi and antilinear in psi under system-operator actions:
//     <psi|(M (x) 1) phi>_* = M <psi|phi>_*
//     <(M (x) 1) psi|phi>_* = <psi|phi>_* M*
// and Hermitian in the module sense: <phi|psi>_* = (<psi|phi>_*)*.
ComplexMatrix star_inner(const BipartiteVector& psi, const BipartiteVector& phi);

/// ||psi||_*^2 = <psi|psi>_*, the reduced density operator of a normalized
/// universe state. Throws "unnormalized input" when <<psi|psi>> deviates from
/// 1 by more than norm_tol.
ComplexMatrix star_norm_sq(const BipartiteVector& psi, double norm_tol = 1e-10);

/// |a>><<b| as a universe operator.
ComplexMatrix outer(const BipartiteVector& a, const BipartiteVector& b);

/// Dissipative generator evaluated through the universe:
/// L(rho) = tr_E [H, |psi>><<psi|].
ComplexMatrix lindbladian_apply(const ComplexMatrix& h, const BipartiteVector& psi);

/// Same commutator-and-reduce action on an arbitrary universe operator,
/// tr_E [H, omega]. Needed to apply the generator to deformed states such as
/// E rho - rho E* (which lift to (E (x) 1)|phi>><<phi| - h.c.).
ComplexMatrix lindbladian_apply(const ComplexMatrix& h, const ComplexMatrix& universe_op, int n_s, int n_e);

/// Largest defect of rho as a density operator: Hermiticity, unit trace,
/// positivity (most negative eigenvalue).
double density_defect(const ComplexMatrix& rho);

struct DensityMatrix {
  ComplexMatrix mat;
  /// Validates Hermiticity, unit trace and positivity up to tol.
  static DensityMatrix make(const ComplexMatrix& m, double tol = 1e-10);
};

/// || D rho + rho D* ||. Vanishes exactly when D belongs to the isotropy
/// algebra of rho (the direction space of trace- and state-preserving
/// deformations).
double j_residual(const ComplexMatrix& d, const ComplexMatrix& rho);

}  // namespace cstar
