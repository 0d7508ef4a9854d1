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

#ifndef CSTARPHASE_EIGEN_SOLVER_HPP_
#define CSTARPHASE_EIGEN_SOLVER_HPP_

#include <functional>
#include <vector>

#include "cstarphase/cstar_module.hpp"
#include "cstarphase/mat_core.hpp"

namespace cstar {

// A parameter-dependent matrix: x in R^d -> complex matrix.  Used both for
// the universe Hamiltonian family H(x) and for system-operator families such
// as the seed E0(x).
using MatFamily = std::function<ComplexMatrix(const RealVector&)>;

// Hilbert-Schmidt-orthonormal basis of the system operators E0 whose ambient
// action commutes with the universe Hamiltonian: {E0 : [E0 (x) 1_E, H] = 0}.
// Computed as the null space (singular values <= tol * sigma_max) of the
// linear map E0 -> [E0 (x) 1_E, H] on the n_s^2-dimensional coefficient
// space.  The basis elements are Hermitian (the commutant of a Hermitian H
// is closed under the adjoint) and the first element is the normalized
// identity, so the result always spans at least {1_S}.
std::vector<ComplexMatrix> commutant_basis(const ComplexMatrix& h, int n_s,
                                           int n_e, double tol = 1e-10);

// Full spectrum of the shifted operator H - E0 (x) 1_E for a Hermitian seed
// E0 commuting with H.  Eigenvalues ascend; eigenvectors are returned as
// normalized bipartite amplitudes.  Each pair (lambda, phi) solves
// H phi = (E (x) 1_E) phi with E = E0 + lambda * 1_S.
// Throws std::invalid_argument("not an eigenoperator seed") if E0 is not
// Hermitian or ||[E0 (x) 1, H]|| > seed_tol * max(1, ||H|| * ||E0||);
// a non-Hermitian H throws "not Hermitian".
struct StarEigenSystem {
  RealVector lambdas;
  std::vector<BipartiteVector> phis;
};
StarEigenSystem solve_star_eigen(const ComplexMatrix& h, const ComplexMatrix& e0,
                                 int n_s, int n_e, double seed_tol = 1e-8);

// One solved point of a continuous operator-eigenvalue family.
struct EigenRecord {
  RealVector x;                 // parameter point
  ComplexMatrix e0;             // Hermitian seed at x
  double lambda = 0.0;          // scalar shift selected from the spectrum
  BipartiteVector phi;          // normalized amplitude
  ComplexMatrix e;              // E = E0 + lambda * 1_S
  ComplexMatrix rho;            // ||phi||^2_* (a density matrix)
  bool possibly_degenerate = false;  // lambda multiplicity > 1 within tolerance
};

// Branch-selection policy for picking one (lambda, phi) pair out of the
// spectrum and keeping it continuous across parameter samples.
struct BranchSelector {
  // Index into the ascending spectrum, used when no reference is given.
  int initial_branch = -1;
  // Optional reference amplitude: the branch maximizing |<<ref|phi>>| is
  // selected and the phase of phi is aligned to the reference.  When empty,
  // initial_branch selects and the phase is left as the solver returns it
  // (largest-magnitude entry rotated to the positive real axis).
  BipartiteVector reference;
  // Minimum admissible |<<prev or ref|phi>>|; below it the tracker refuses
  // to continue rather than silently jumping branches.
  double overlap_threshold = 0.5;
  // Two spectrum members within degeneracy_tol * spectral span of the
  // selected lambda raise the possibly_degenerate flag.
  double degeneracy_tol = 1e-8;
};

// Tracks one spectral branch of H(x) - E0(x) (x) 1_E along a sequence of
// parameter points: each record_at() call selects the branch with maximal
// overlap against the previously returned amplitude (or the selector's
// reference / initial_branch on the first call) and aligns its phase so the
// overlap is real positive.  Throws std::runtime_error("branch tracking
// lost") when the best overlap drops below the selector threshold.
class BranchTracker {
 public:
  BranchTracker(MatFamily h, MatFamily e0, int n_s, int n_e, BranchSelector sel);

  EigenRecord record_at(const RealVector& x);
  // Forget the continuity state; the next record_at() selects afresh.
  void reset();
  bool has_state() const { return has_prev_; }
  const BranchSelector& selector() const { return sel_; }

 private:
  MatFamily h_;
  MatFamily e0_;
  int n_s_;
  int n_e_;
  BranchSelector sel_;
  bool has_prev_ = false;
  BipartiteVector prev_phi_;
};

// One-shot record construction at a single point (no continuity state).
EigenRecord build_eigen_record(const MatFamily& h, const MatFamily& e0,
                               const BranchSelector& sel, const RealVector& x,
                               int n_s, int n_e);

// Orthogonal projector in the universe space onto the lambda-eigenspace of
// H - E0 (x) 1_E (all spectrum members within deg_tol * spectral span of
// lambda are included).
ComplexMatrix eigenspace_projector(const ComplexMatrix& h, const ComplexMatrix& e0,
                                   double lambda, int n_s, int n_e,
                                   double deg_tol = 1e-8);

// Residual report for a solved record.  All entries are relative:
//   eigen_residual        ||H phi - (E (x) 1) phi|| / ||H||
//   commutation_residual  ||[E (x) 1, H]|| / (||H|| ||E||)
//   trace_skew            |tr(rho (E - E^dag))| / ||E||
//   lindblad_residual     ||tr_E[H,|phi>><<phi|] - (E rho - rho E^dag)|| / ||H||
//   second_order_residual residual of the lifted relation
//                         tr_E[H, E|phi>><<phi| - |phi>><<phi|E^dag]
//                           == E L(rho) - L(rho) E^dag, over ||H|| max(1,||E||)
//   eigenspace_residual   ||(1 - P) (E (x) 1) phi|| / max(1, ||E||), P the
//                         lambda-eigenspace projector (E preserves it)
//   density_defect        distance of rho from the density matrices
struct RecordValidation {
  double eigen_residual = 0.0;
  double commutation_residual = 0.0;
  double trace_skew = 0.0;
  double lindblad_residual = 0.0;
  double second_order_residual = 0.0;
  double eigenspace_residual = 0.0;
  double density_defect = 0.0;
  bool possibly_degenerate = false;

  double max_residual() const;
};
RecordValidation validate_eigen_record(const ComplexMatrix& h, const EigenRecord& rec,
                                       double deg_tol = 1e-8);

}  // namespace cstar

#endif  // CSTARPHASE_EIGEN_SOLVER_HPP_
