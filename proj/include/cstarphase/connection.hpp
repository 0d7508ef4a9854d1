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

#ifndef CSTARPHASE_CONNECTION_HPP_
#define CSTARPHASE_CONNECTION_HPP_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cstarphase/eigen_solver.hpp"
#include "cstarphase/mat_core.hpp"

namespace cstar {

// Uniform rectangular sample grid embedded in parameter space.  The grid has
// its own dimension d = axes.size(): grid axis j varies parameter coordinate
// axes[j] with spacing steps[j], all other coordinates stay at the origin
// values.  Flat indices are row-major with the last grid axis fastest.
struct ParamGrid {
  RealVector origin;          // full parameter-space point
  std::vector<int> axes;      // parameter coordinate varied by each grid axis
  std::vector<int> dims;      // sample count per grid axis (>= 3 for FD use)
  RealVector steps;           // spacing per grid axis

  int ndim() const { return static_cast<int>(axes.size()); }
  int size() const;
  int stride(int axis) const;
  int flat(const std::vector<int>& idx) const;
  std::vector<int> unflat(int flat_index) const;
  RealVector point(const std::vector<int>& idx) const;
  RealVector point_flat(int flat_index) const;
  void validate() const;  // throws on inconsistent field sizes
};

// Componentwise derivative of a matrix-valued grid field along grid axis j:
// central differences at interior nodes, one-sided second-order stencils at
// the two boundary layers.  Throws std::invalid_argument("grid too small")
// when the axis has fewer than 3 samples.
std::vector<ComplexMatrix> grid_derivative(const std::vector<ComplexMatrix>& values,
                                           const ParamGrid& grid, int axis);

// Matrix-valued one-form sampled on a grid: comp[mu][flat] = W_mu(x_flat).
struct MatrixOneForm {
  std::string chart_id;
  ParamGrid grid;
  std::vector<std::vector<ComplexMatrix>> comp;  // [direction][flat sample]

  int ndim() const { return static_cast<int>(comp.size()); }
};

// Matrix-valued two-form with only the mu < nu components stored;
// at(mu, nu, k) returns the negation for mu > nu and zero for mu == nu.
struct MatrixTwoForm {
  std::string chart_id;
  ParamGrid grid;
  std::vector<std::pair<int, int>> pairs;        // lexicographic mu < nu
  std::vector<std::vector<ComplexMatrix>> comp;  // [pair][flat sample]

  static std::vector<std::pair<int, int>> index_pairs(int ndim);
  int pair_index(int mu, int nu) const;  // requires mu < nu
  ComplexMatrix at(int mu, int nu, int flat_index) const;
};

// Matrix-valued three-form with only mu < nu < sigma stored (on 3-D grids
// this is the single triple (0,1,2)).
struct MatrixThreeForm {
  std::string chart_id;
  ParamGrid grid;
  std::vector<std::array<int, 3>> triples;
  std::vector<std::vector<ComplexMatrix>> comp;

  static std::vector<std::array<int, 3>> index_triples(int ndim);
};

// Exterior derivative by grid finite differences:
//   (dW)_{mu nu}       = D_mu W_nu - D_nu W_mu
//   (dB)_{mu nu sigma} = D_mu B_{nu sigma} - D_nu B_{mu sigma} + D_sigma B_{mu nu}
MatrixTwoForm exterior_d(const MatrixOneForm& w);
MatrixThreeForm exterior_d(const MatrixTwoForm& b);

// Pointwise wedge of two one-forms: (a ^ b)_{mu nu} = a_mu b_nu - a_nu b_mu.
MatrixTwoForm wedge(const MatrixOneForm& a, const MatrixOneForm& b);

// Graded commutator of two one-forms: [a, b] = a ^ b + b ^ a.
MatrixTwoForm graded_comm(const MatrixOneForm& a, const MatrixOneForm& b);

// Commutator of a one-form with a two-form: [a, B] = a ^ B - B ^ a with
//   (a ^ B)_{mu nu sigma} = a_mu B_{nu sigma} - a_nu B_{mu sigma} + a_sigma B_{mu nu}
//   (B ^ a)_{mu nu sigma} = B_{mu nu} a_sigma - B_{mu sigma} a_nu + B_{nu sigma} a_mu
MatrixThreeForm comm_one_two(const MatrixOneForm& a, const MatrixTwoForm& b);

// A solved eigen-record at every grid sample.
struct SectionField {
  std::string chart_id;
  ParamGrid grid;
  std::vector<EigenRecord> recs;  // indexed by flat grid index
};

using SectionFamily = std::function<BipartiteVector(const RealVector&)>;

// Solve the operator-eigenvalue problem at every grid sample.  When
// `phase_reference` is non-null every sample is selected and phase-aligned
// against the reference amplitude at that point (deterministic and
// gauge-smooth whenever the reference is).  Otherwise the records are
// aligned sample-to-sample along the grid: each sample aligns to its
// already-solved predecessor along the first grid axis with a positive
// index (the origin sample uses `sel` as given).
SectionField build_section_field(const MatFamily& h, const MatFamily& e0,
                                 const BranchSelector& sel, const ParamGrid& grid,
                                 int n_s, int n_e,
                                 const SectionFamily& phase_reference = nullptr,
                                 const std::string& chart_id = "chart");

struct GeneratorOptions {
  double rank_tol = 1e-10;   // relative eigenvalue cutoff for range/kernel split
  double solve_tol = 1e-8;   // admissibility threshold for the kernel block
};

// Minimal-norm solution W of the sesquilinear generator equation
// W rho = m: W = m pinv(rho), with the free blocks on ker(rho) set to zero.
// Throws std::runtime_error("no solution: inconsistent right-hand side")
// when m has support on ker(rho) beyond solve_tol (the equation right
// multiplies by rho, so admissible right-hand sides must kill the kernel).
ComplexMatrix solve_generator_equation(const ComplexMatrix& m, const ComplexMatrix& rho,
                                       const GeneratorOptions& opts = {});

// Full phase-generator component along grid axis mu: at every sample the
// minimal-norm solution of W rho = <phi|d_mu phi>_*.  The section must keep
// a constant rho rank across the grid ("rank change detected" otherwise).
std::vector<ComplexMatrix> generator_from_section(const SectionField& field, int mu,
                                                  const GeneratorOptions& opts = {});

// All components assembled into a one-form.
MatrixOneForm generator_one_form(const SectionField& field,
                                 const GeneratorOptions& opts = {});

// Invertible-rho shortcut (1/2) (d_mu rho) rho^{-1}.  Throws
// std::runtime_error("breve generator undefined; use generator_from_section")
// when some sample of rho is singular at the rank_tol threshold.
std::vector<ComplexMatrix> breve_generator(const std::vector<ComplexMatrix>& rho_field,
                                           const ParamGrid& grid, int mu,
                                           const GeneratorOptions& opts = {});

// Split of the phase generator into the adiabatic part and the remainder:
// A solves A rho = <phi|P d_mu phi>_* and R solves R rho = <phi|(1-P) d_mu phi>_*
// with P the eigenspace projector of the record's (E0, lambda) branch; their
// sum reproduces generator_from_section exactly (the defining right-hand
// sides add up), and tr(rho R) vanishes up to discretization error.
struct SplitGenerator {
  MatrixOneForm reduced;    // A
  MatrixOneForm remainder;  // R
};
SplitGenerator split_generator(const SectionField& field, const MatFamily& h,
                               const GeneratorOptions& opts = {});

// Single-direction variant.
std::pair<std::vector<ComplexMatrix>, std::vector<ComplexMatrix>> split_generator_component(
    const SectionField& field, const MatFamily& h, int mu,
    const GeneratorOptions& opts = {});

// Gauge-transformed generator W~ = g W g^{-1} + (d_mu g) g^{-1} + g eta g^{-1}
// with dg by grid finite differences; `eta` may be empty (treated as zero).
// Throws std::invalid_argument("singular g") if a sample of g is not
// invertible.
MatrixOneForm gauge_transform_generator(const MatrixOneForm& w,
                                        const std::vector<ComplexMatrix>& g_field,
                                        const MatrixOneForm* eta = nullptr);

// Projection of X onto the algebra {D : D rho + rho D^dag = 0} associated
// with rho: in an eigenbasis of rho ordered range-first with positive block
// P, the projection keeps the off-diagonal range->kernel block and the
// kernel block, zeroes the kernel->range block, and replaces the range block
// X11 by (X11 - P X11^dag P^{-1}) / 2.
ComplexMatrix j_part(const ComplexMatrix& x, const ComplexMatrix& rho,
                     double rank_tol = 1e-10);

// Curvature data of a split generator field:
//   curving        B = dW - W ^ W            (W the full generator)
//   fake           F = dR - [A, R] - R ^ R
//   true curvature H = dB - [A, B] and its alternative dF - [A, F]
// The three-forms are produced only on grids of dimension >= 3.
struct CurvatureData {
  MatrixTwoForm curving;
  MatrixTwoForm fake;
  bool has_three_form = false;
  MatrixThreeForm true_from_curving;
  MatrixThreeForm true_from_fake;
};
CurvatureData curvatures(const MatrixOneForm& full, const MatrixOneForm& reduced,
                         const MatrixOneForm& remainder);

// Max over samples and index pairs of ||B_{mu nu} rho + rho B_{mu nu}^dag||:
// the curving takes values in the rho-stabilizer algebra, so this measures
// discretization error.
double curving_j_residual(const MatrixTwoForm& b, const SectionField& field);

// A family of charts over one shared sample grid, each carrying its own
// section of the same eigen-branch, together with the pairwise transition
// fields g[a][b][flat] (g[a][a] = 1, g[b][a] = g[a][b]^{-1}) that relate the
// chart sections.
struct ChartAtlas {
  ParamGrid grid;
  std::vector<std::string> ids;
  std::vector<SectionField> charts;
  std::vector<std::vector<std::vector<ComplexMatrix>>> g;
};

// Per-chart differential data on the atlas grid.
struct ChartForms {
  MatrixOneForm full;       // W (generator of the full phase)
  MatrixOneForm reduced;    // A
  MatrixOneForm remainder;  // R
  MatrixTwoForm curving;    // B
  MatrixTwoForm fake;       // F
};
std::vector<ChartForms> atlas_forms(const ChartAtlas& atlas, const MatFamily& h,
                                    const GeneratorOptions& opts = {});

// Transition analysis: triple products h[a][b][c][flat] =
// g^{ab} g^{bc} g^{ca}, the pairwise one-form eta[a][b] extracted as the
// stabilizer-algebra part of g W^b g^{-1} - W^a + (dg) g^{-1} built from the
// full generators W (whenever g conjugates rho^b into rho^a that combination
// already lies in the stabilizer algebra of rho^a, so the projection only
// removes finite-difference noise), and the residual report over the atlas:
//   rho_consistency   max ||rho^a - g rho^b g^dag||
//   cocycle_conj      max ||h^{abc} - g^{ab} h^{bca} (g^{ab})^{-1}||
//   cocycle_inv       max ||h^{acb} - (h^{abc})^{-1}||
//   cocycle_swap      max ||h^{bac} - (g^{ab})^{-1} (h^{abc})^{-1} g^{ab}||
//   cocycle_quad      max ||h^{adc} h^{acb} - h^{adb} g^{ab} h^{bdc} (g^{ab})^{-1}||
//   h_fixes_rho       max ||h rho^a h^dag - rho^a||
//   eta_extraction    max ||combo - eta||  (the combination above must already
//                       lie in the stabilizer algebra; only FD error remains)
//   eta_j_residual    max ||eta_mu rho^a + rho^a eta_mu^dag||
//   eta_cocycle       max residual of  eta^{ab} + g eta^{bc} g^{-1} - h eta^{ac} h^{-1}
//                       == (dh) h^{-1} - (W^a h - h W^a) h^{-1}   (FD d)
struct TransitionReport {
  double rho_consistency = 0.0;
  double cocycle_conj = 0.0;
  double cocycle_inv = 0.0;
  double cocycle_swap = 0.0;
  double cocycle_quad = 0.0;
  double h_fixes_rho = 0.0;
  double eta_extraction = 0.0;
  double eta_j_residual = 0.0;
  double eta_cocycle = 0.0;
};
struct AtlasTransitions {
  // h[a][b][c][flat]; eta[a][b] one-forms (empty grid copy when a == b)
  std::vector<std::vector<std::vector<std::vector<ComplexMatrix>>>> h;
  std::vector<std::vector<MatrixOneForm>> eta;
  TransitionReport report;
};
AtlasTransitions transition_functions(const ChartAtlas& atlas,
                                      const std::vector<ChartForms>& forms,
                                      const GeneratorOptions& opts = {});

// Gauge-law residuals for the curvature data across charts; `chi[a][b]` is
// the graded commutator [R^a, eta^{ab}].  Checked laws:
//   curving_law   B^b == g^{-1} (B^a + d eta - eta ^ eta - [A^a, eta] - chi) g
//   fake_law      F^b == g^{-1} F^a g - g^{-1} chi g
//   chi_cocycle   chi^{ab} + g chi^{bc} g^{-1} - h chi^{ac} h^{-1}
//                   == -h (F^a h^{-1} - h^{-1} F^a)
struct GaugeLawChecks {
  double curving_law = 0.0;
  double fake_law = 0.0;
  double chi_cocycle = 0.0;
};
GaugeLawChecks curvature_gauge_check(const ChartAtlas& atlas,
                                     const std::vector<ChartForms>& forms,
                                     const AtlasTransitions& transitions);

}  // namespace cstar

#endif  // CSTARPHASE_CONNECTION_HPP_
