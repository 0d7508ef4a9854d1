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

#ifndef CSTARPHASE_QUBIT_MODEL_HPP_
#define CSTARPHASE_QUBIT_MODEL_HPP_

#include <array>
#include <string>

#include "cstarphase/connection.hpp"
#include "cstarphase/cstar_module.hpp"
#include "cstarphase/eigen_solver.hpp"
#include "cstarphase/mat_core.hpp"
#include "cstarphase/transport.hpp"

namespace cstar {

// Phase-damping qubit with a single fermionic environment mode.  The qubit
// population couples to the mode displacement; no energy is exchanged, so an
// initially excited qubit dephases instead of decaying.  Every operator
// family in this module is the rotated image of a fixed 4x4 universe
// Hamiltonian under U(x) = exp(i x.sigma) acting on the system factor, which
// is what makes closed forms available for cross-checking the generic
// solvers.
struct QubitModelParams {
  double hbar = 1.0;
  double omega_c = 1.0;  // qubit frequency, > 0
  double omega_b = 1.0;  // environment-mode frequency, > 0
  double chi = 0.3;      // population-displacement coupling
};

// Static building blocks: H0 = hbar*omega_c c+c (x) 1 + hbar*omega_b 1 (x) b+b
// + chi c+c (x) (b + b+), with c and b two-level lowering operators embedded
// across the tensor product (the embedding commutes across factors; the
// Hamiltonian only uses c+c on the system side, so no fermionic sign
// convention is visible).
struct QubitUniverse {
  ComplexMatrix h0;       // 4x4, Hermitian
  ComplexMatrix lower_s;  // c, 2x2
  ComplexMatrix lower_e;  // b, 2x2
  ComplexMatrix c_op;     // c (x) 1, 4x4
  ComplexMatrix b_op;     // 1 (x) b, 4x4
};
QubitUniverse build_qubit_universe(const QubitModelParams& p);

// Pauli matrix, mu in {1, 2, 3}.
ComplexMatrix pauli(int mu);

// U(x) = exp(i x^mu sigma_mu) for a 3-component parameter vector.
ComplexMatrix qubit_rotation(const RealVector& x);

// Rotation together with its exact partial derivatives.  du[mu] is obtained
// from the augmented 4x4 exponential exp([[M, i sigma_mu],[0, M]]) whose
// upper-right block is the directional derivative of exp at M = i x.sigma;
// no finite differences are involved.
struct RotationJet {
  ComplexMatrix u;
  std::array<ComplexMatrix, 3> du;
};
RotationJet qubit_rotation_jet(const RealVector& x);

// The scalar shift selected by the model's excited dephasing branch:
// lambda = (sqrt(4 chi^2 + hbar^2 omega_b^2) + 2 hbar omega_c + hbar omega_b)/2.
double analytic_lambda(const QubitModelParams& p);

// Normalized universe amplitude at x = 0: a combination of |10> and |11>
// with weights (2 chi, hbar omega_b + sqrt(4 chi^2 + hbar^2 omega_b^2)).
// Its square *-norm is exactly |1><1| for every chi.
BipartiteVector analytic_amplitude(const QubitModelParams& p);

// Closed-form eigen data at parameter x: seed hbar*omega_c U|0><0|U^-1,
// shift analytic_lambda, amplitude (U (x) 1) analytic_amplitude, and density
// U|1><1|U^-1.  Passes every residual check of validate_eigen_record.
EigenRecord analytic_eigen(const QubitModelParams& p, const RealVector& x);

// Closed-form generator data at x, with w = U^-1 dU:
//   full[mu]    = U [[0, w01],[0, w11]] U^-1   (phase generator)
//   reduced[mu] = w11 U |1><1| U^-1            (gauge potential)
//   coupling[mu] = <0|w_mu|1>, whose pullback along a path is the
//                  adiabaticity diagnostic for this model.
struct AnalyticGenerators {
  std::array<ComplexMatrix, 3> full;
  std::array<ComplexMatrix, 3> reduced;
  std::array<Complex, 3> coupling;
};
AnalyticGenerators analytic_generators(const QubitModelParams& p,
                                       const RealVector& x);

// Generator one-forms contracted with a path's velocity, evaluated from the
// rotation jet instead of by differencing section samples.  The sample
// matrices satisfy the transport identity to machine precision (the reduced
// parts are exactly anti-Hermitian, w11 being purely imaginary), so the only
// trace drift left in a transport run driven by these samples is the
// integrator's own — whereas differencing the section along the path leaks
// an identity-violating error of order dt^2 into the samples, and the
// resulting drift only shrinks quadratically with the loop duration at fixed
// samples per unit time.  Use this pullback for trace-critical transport
// runs on the qubit preset; use pullback_split_generator when exercising the
// sampled pipeline itself.
PullbackSplit analytic_split_pullback(const QubitModelParams& p,
                                      const ParameterPath& path);

// Which invariance algebras contain the operator O, judged by the block
// pattern of U(x)^-1 O U(x) against `tol` (scaled by max(1, |O|)):
//   symmetry  — lower triangular [[alpha, 0],[gamma, beta]]
//   stab0     — lower triangular with beta purely imaginary
//   stab1     — lower triangular with beta = 0
//   env_phase — imaginary multiple of the identity
struct AlgebraMembership {
  bool symmetry = false;
  bool stab0 = false;
  bool stab1 = false;
  bool env_phase = false;
};
AlgebraMembership gauge_algebra_membership(const QubitModelParams& p,
                                           const RealVector& x,
                                           const ComplexMatrix& o,
                                           double tol = 1e-10);

// Parameterized operator families feeding the generic solvers.
struct QubitSystem {
  QubitModelParams params;
  QubitUniverse universe;
  MatFamily h;   // x -> (U (x) 1) H0 (U (x) 1)^dag
  MatFamily e0;  // x -> hbar*omega_c U |0><0| U^-1
};
QubitSystem make_qubit_system(const QubitModelParams& p);

// Section with an invertible square *-norm, for derivative experiments that
// need a full-rank density: phi(x) = (U (x) 1)(sqrt(1-w)|00> + sqrt(w)|11>),
// so rho(x) = U diag(1-w, w) U^-1.  Requires 0 < w < 1.  The records carry
// phi/rho only; this is not an eigen-section of the universe Hamiltonian.
SectionField full_rank_field(const QubitModelParams& p, const ParamGrid& grid,
                             double weight,
                             const std::string& chart_id = "full-rank");

// Synthetic multi-chart cover of one grid for transition-law experiments.
// Chart sections are the closed-form eigen-sections dressed by smooth
// x-dependent phases; because the tracked branch is nondegenerate every
// chart shares the same density field, and the interesting structure lives
// in the phase dressings (they shift the reduced potential by a multiple of
// the range projector, which does not commute with the remainder R — so the
// commutator correction in the curvature transformation laws is genuinely
// nonzero on this atlas).
//
// Transition fields, chosen per `sheared_transitions`:
//   false (default)  g[a][b] = exp(i mu_ab(x)) * 1 with independent smooth
//                    phase fields, mu_ba = -mu_ab.  Scalar transitions
//                    commute with the remainder, which every transformation
//                    law of the split generator implicitly requires here:
//                    (0,1)-eigensections of one branch share one remainder
//                    field, so a transition must fix it under conjugation,
//                    and the only density-compatible range-stabilizing
//                    matrices that do so are unit-modulus scalars.  All
//                    cocycle identities and both curvature laws close.
//   true             g[a][b] = rotating-frame exponentials of independently
//                    twisted lower-triangular generators with a unit-modulus
//                    corner: still density-compatible, so the potential law,
//                    its stabilizer-algebra extraction, and the curving law
//                    still close — but conjugation now moves the remainder,
//                    so the fake-curvature law and the commutator-correction
//                    cocycle acquire order-one residuals.  Useful for
//                    pinning down which laws need remainder covariance.
//
// Twists and phases are deterministic trigonometric polynomials in x with
// gentle amplitudes, distinct per chart pair; g[b][a] is the exact inverse
// of g[a][b], which makes the algebraic triple-product identities hold at
// machine precision while the triple products themselves stay far from the
// identity.
ChartAtlas build_demo_atlas(const QubitModelParams& p, const ParamGrid& grid,
                            int n_charts = 4, bool sheared_transitions = false);

}  // namespace cstar

#endif  // CSTARPHASE_QUBIT_MODEL_HPP_
