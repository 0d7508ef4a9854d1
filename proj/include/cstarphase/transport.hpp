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

#ifndef CSTARPHASE_TRANSPORT_HPP_
#define CSTARPHASE_TRANSPORT_HPP_

#include <utility>
#include <vector>

#include "cstarphase/closed_baseline.hpp"
#include "cstarphase/connection.hpp"
#include "cstarphase/eigen_solver.hpp"
#include "cstarphase/mat_core.hpp"

namespace cstar {

// A control-parameter evolution t -> x(t) sampled at uniformly spaced times
// from 0 to the duration.
struct ParameterPath {
  std::vector<double> ts;
  std::vector<RealVector> xs;

  int size() const { return static_cast<int>(xs.size()); }
  double duration() const { return ts.empty() ? 0.0 : ts.back(); }
  double dt() const;
  // Piecewise-cubic interpolation of the waypoints.
  RealVector at(double t) const;
  // Velocity at a sample node by five-point differences (fourth order,
  // one-sided near the ends; three-point stencils when the path is shorter).
  RealVector velocity(int k) const;
  void validate() const;  // throws "path too short" unless ts increase from 0
};

// Closed circle of the parameter point in the (axis_a, axis_b) plane,
// traversed once counterclockwise (or clockwise), sampled inclusively so the
// last waypoint repeats the first.
ParameterPath circle_path(const RealVector& center, double radius, int axis_a,
                          int axis_b, double duration, int n_samples,
                          bool clockwise = false);
// Straight segment from x0 to x1.
ParameterPath segment_path(const RealVector& x0, const RealVector& x1,
                           double duration, int n_samples);
// Constant path x(t) = x0.
ParameterPath stationary_path(const RealVector& x0, double duration, int n_samples);

// Exact universe evolution (i hbar) dpsi/dt = H(x(t)) psi by fixed-step RK4
// with `substeps` steps per waypoint interval; returns the state at every
// waypoint.  Throws std::runtime_error("refine N") if the norm drifts from 1
// by more than 1e-6 anywhere along the integration.
std::vector<BipartiteVector> schrodinger_integrate(const MatFamily& h,
                                                   const BipartiteVector& psi0,
                                                   const ParameterPath& path,
                                                   double hbar = 1.0,
                                                   int substeps = 10);

// Dynamical-phase ordered exponential: solves dG/dt = -(i/hbar) E(t) G,
// G(0) = 1, from the uniformly spaced samples e_samples[k] = E(t_k), with
// piecewise-cubic reconstruction between samples.
ComplexMatrix time_ordered_exp(const std::vector<ComplexMatrix>& e_samples,
                               double dt, double hbar = 1.0, int substeps = 4);

// Anti-ordered exponential acting by right multiplication: solves
// dG/dt = -G W(t), G(0) = 1, from samples of W.  This is the geometric
// factor that conjugation-transports a state: for W with W rho + rho W^dag
// = d rho / dt along the path, G(t) rho(0)... (see parallel_transport_check).
ComplexMatrix ordered_exp_right(const std::vector<ComplexMatrix>& w_samples,
                                double dt, int substeps = 4);
// Same, returning the value at every sample node.
std::vector<ComplexMatrix> ordered_exp_right_series(
    const std::vector<ComplexMatrix>& w_samples, double dt, int substeps = 4);

// One tracked eigen-branch along a parameter path.
struct PathSection {
  ParameterPath path;
  std::vector<EigenRecord> recs;
};
PathSection build_path_section(const MatFamily& h, const MatFamily& e0,
                               const BranchSelector& sel, const ParameterPath& path,
                               int n_s, int n_e);

// Pullback of the full phase generator onto the path: per-sample solutions
// W(t_k) of W rho = <phi | d phi/dt>_* (the time derivative by sample
// differences), which equals the one-form contraction with the velocity.
std::vector<ComplexMatrix> pullback_full_generator(const PathSection& sec,
                                                   const GeneratorOptions& opts = {});

// Pullback of the reduced generator and the remainder separately, using the
// eigenspace projector of each record.
struct PullbackSplit {
  std::vector<ComplexMatrix> reduced;    // A_mu xdot^mu samples
  std::vector<ComplexMatrix> remainder;  // R_mu xdot^mu samples
};
PullbackSplit pullback_split_generator(const PathSection& sec, const MatFamily& h,
                                       const GeneratorOptions& opts = {});

// Transport along the path: integrates the coupled linear system
//   dg/dt = -(i/hbar) E(x(t)) g - g W(t),   g(0) = 1,
// where W is the pullback of the reduced generator plus the optional
// stabilizer-algebra term (null -> zero), and E(x(t)) comes from the path
// section.  This is the sampled form of the product of the dynamical-phase
// ordered exponential with the geometric anti-ordered exponential; the
// returned states are rho(t_k) = g(t_k) rho_E(x(t_k)) g(t_k)^dag.
struct TransportResult {
  std::vector<double> ts;
  std::vector<ComplexMatrix> g;
  std::vector<ComplexMatrix> rho;
  std::vector<double> trace_residual;  // |tr rho(t_k) - 1|
  // Filled by adiabaticity_diagnostic / experiment drivers when available:
  std::vector<double> diagnostic;
  double max_diagnostic = 0.0;
};
TransportResult adiabatic_transport(const PathSection& sec,
                                    const std::vector<ComplexMatrix>& a_pullback,
                                    const std::vector<ComplexMatrix>* eta_pullback = nullptr,
                                    double hbar = 1.0, int substeps = 10);

// Operator-norm series and maximum of the remainder pullback samples: the
// transport is adiabatically consistent when this is small.
std::pair<std::vector<double>, double> adiabaticity_diagnostic(
    const std::vector<ComplexMatrix>& r_pullback);

// Per-sample eigenspace escape 1 - <psi | P psi> of exact universe states
// against the projector of the tracked branch.
std::vector<double> leakage_series(const std::vector<BipartiteVector>& psis,
                                   const PathSection& sec, const MatFamily& h,
                                   double deg_tol = 1e-8);

// Trace-distance series between the exact reduced state ||psi(t_k)||^2_* and
// the transported rho(t_k), plus the final-time fidelity
// (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.  Throws
// std::invalid_argument("time-grid mismatch") if the series lengths differ.
struct TransportError {
  std::vector<double> trace_distance;
  double max_trace_distance = 0.0;
  double final_fidelity = 1.0;
};
TransportError transport_error(const std::vector<BipartiteVector>& exact_psis,
                               const TransportResult& transported);

// Trace distance (1/2) tr |a - b| of two density matrices.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

// Parallel-transport residual: transports rho(0) by the right-multiplication
// ordered exponential of w_samples (the pullback of the full generator plus
// any stabilizer term) and returns the max sample-difference norm of
// d/dt [ g(t) rho(0)... g(t)^dag ] against the section's own rho(t_k) --
// concretely max_k || d/dt ( g rho_E(x(t)) g^dag ) || by finite differences.
double parallel_transport_check(const std::vector<ComplexMatrix>& w_samples,
                                const std::vector<ComplexMatrix>& rho_samples,
                                double dt, int substeps = 4);

}  // namespace cstar

#endif  // CSTARPHASE_TRANSPORT_HPP_
