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

#ifndef CSTARPHASE_CLOSED_BASELINE_HPP_
#define CSTARPHASE_CLOSED_BASELINE_HPP_

#include <functional>
#include <string>
#include <vector>

#include "cstarphase/mat_core.hpp"

namespace cstar {

// A sampled eigenvector field along a single parameter path: the data needed
// to accumulate geometric phases for ordinary (vector-valued) eigenstates.
// Samples are uniformly spaced in the path parameter; `ts` carries the
// parameter values, `xs` optionally carries the parameter-space points.
struct VectorSection {
  std::string chart_id;
  std::vector<double> ts;
  std::vector<RealVector> xs;           // optional; may be empty
  std::vector<ComplexVector> phis;
  std::vector<Complex> energies;        // optional; may be empty
  bool closed = false;

  int size() const { return static_cast<int>(phis.size()); }
  // Uniform parameter spacing between consecutive samples.
  double dt() const;
};

// Pullback of the phase-generating one-form onto the path: samples of
// a(t_k) = <phi(t_k)| phi'(t_k)>, the inner product of the section with its
// parameter derivative (central differences at interior samples, one-sided
// second-order stencils at the ends).  For a normalized section every sample
// is purely imaginary up to discretization error, and the integral of the
// samples around a closed loop is the accumulated geometric phase generator.
// Throws std::invalid_argument("path too short") for fewer than 3 samples.
std::vector<Complex> berry_connection(const VectorSection& sec);

// Phase generator for sections that are not kept normalized: the pair of
// sample series (a, Re a) with a(t_k) = <phi|phi'> / ||phi||^2.  The real
// part equals d/dt log||phi|| up to discretization error, so it is an exact
// derivative and its loop integral vanishes: amplitude holonomy is trivial.
// Throws std::invalid_argument("degenerate section") if a sample has zero
// norm.
struct DissipativeConnection {
  std::vector<Complex> a;
  std::vector<double> re_a;
};
DissipativeConnection dissipative_generator(const VectorSection& sec);

// Trapezoid rule over uniformly spaced samples.  For samples of a smooth
// periodic function over a full period (first sample repeated at the end)
// this is spectrally accurate.
Complex integrate_samples(const std::vector<Complex>& ys, double dt);
double integrate_samples(const std::vector<double>& ys, double dt);

// Derivative of a uniformly spaced sample series: central differences at
// interior nodes, one-sided second-order stencils at the two ends.
// Requires at least 3 samples ("path too short").
std::vector<ComplexVector> series_derivative(const std::vector<ComplexVector>& ys, double dt);
std::vector<ComplexMatrix> series_derivative(const std::vector<ComplexMatrix>& ys, double dt);

// Ordered exponential of a sampled generator along a path: solves the
// left-ordered linear system
//     dG/dt = -W(t) G,   G(0) = 1,
// where W(t) is reconstructed from the uniformly spaced samples
// w_samples[k] = W(t_k) by piecewise-cubic interpolation, and the system is
// integrated with fixed-step classical 4th-order Runge-Kutta (`substeps`
// steps per sample interval).  The input samples are the pullback components
// W(t_k) = A_mu(x(t_k)) xdot^mu(t_k) of a matrix one-form along the path.
// For mutually commuting samples the result equals matrix_exp(-∫W dt); for a
// constant generator it is exact up to integrator order.  Ordered
// exponentials compose contravariantly: the result for a concatenated path
// is G_second * G_first, which is also how piecewise-constant generators
// (with a jump at a sample node) should be handled.
// Requires at least 2 samples ("path too short" otherwise).
ComplexMatrix path_ordered_exp(const std::vector<ComplexMatrix>& w_samples,
                               double dt, int substeps = 4);

// Same ordered exponential for a generator given as a callable W(t):
// solves dG/dt = -W(t) G from t0 to t1 with `steps` RK4 steps.
ComplexMatrix path_ordered_exp(const std::function<ComplexMatrix(double)>& w,
                               double t0, double t1, int steps);

// Evaluates a piecewise-cubic (4-point Lagrange) interpolant through
// uniformly spaced matrix samples at parameter t measured in units of the
// sample spacing (t = k hits sample k exactly).  Near the ends the stencil
// is clamped to the available samples.  Fourth-order accurate for smooth
// data; used for the sub-step values of sampled generators.
ComplexMatrix cubic_sample(const std::vector<ComplexMatrix>& samples, double t);

}  // namespace cstar

#endif  // CSTARPHASE_CLOSED_BASELINE_HPP_
