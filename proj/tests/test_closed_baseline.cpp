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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cstarphase/closed_baseline.hpp"
#include "cstarphase/mat_core.hpp"

using namespace cstar;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Spin-1/2 eigenstate along n(theta, varphi) at fixed latitude theta:
// |psi> = (cos(theta/2), sin(theta/2) e^{i varphi}), the gauge used by the
// reference script, whose loop integral is -i pi (1 - cos theta) clockwise.
ComplexVector latitude_state(double theta, double varphi) {
  ComplexVector v(2);
  v(0) = std::cos(theta / 2.0);
  v(1) = std::sin(theta / 2.0) * std::exp(kI * varphi);
  return v;
}

VectorSection latitude_loop(double theta, int n, bool clockwise) {
  VectorSection sec;
  sec.chart_id = "latitude";
  sec.closed = true;
  for (int k = 0; k <= n; ++k) {
    const double s = static_cast<double>(k) / n;
    const double varphi = (clockwise ? -1.0 : 1.0) * 2.0 * kPi * s;
    sec.ts.push_back(s);
    sec.phis.push_back(latitude_state(theta, varphi));
  }
  return sec;
}

}  // namespace

TEST_CASE("closed-loop phase generator integral matches the latitude value") {
  // Frozen reference (tests/oracle/berry_reference.py): theta = pi/3,
  // clockwise loop, integral of <phi|phi'> = -i pi (1 - cos theta) = -i pi/2.
  // The sampled derivative carries a systematic (2 pi dt)^2/6 relative factor,
  // so the value is checked together with its 2nd-order convergence.
  const double want = -1.57079632679425;
  auto loop_value = [](int n) {
    const VectorSection sec = latitude_loop(kPi / 3.0, n, /*clockwise=*/true);
    return integrate_samples(berry_connection(sec), sec.dt());
  };
  const Complex v1 = loop_value(500), v2 = loop_value(1000);
  CHECK(std::abs(v1.real()) < 1e-10);
  CHECK(std::abs(v2.imag() - want) < 2e-5);
  CHECK(std::log2(std::abs(v1.imag() - want) / std::abs(v2.imag() - want)) >
        1.9);

  // Counter-clockwise flips the sign.
  const VectorSection ccw = latitude_loop(kPi / 3.0, 1000, /*clockwise=*/false);
  const Complex rev = integrate_samples(berry_connection(ccw), ccw.dt());
  CHECK(std::abs(rev.imag() + want) < 2e-5);
}

TEST_CASE("phase generator samples are purely imaginary for normalized data") {
  // The real part is pure discretization error, O(dt^2) with an O(10)
  // curvature coefficient at this loop speed.
  const VectorSection sec = latitude_loop(0.9, 200, false);
  for (const Complex& a : berry_connection(sec)) {
    CHECK(std::abs(a.real()) < 1e-4);
  }
}

TEST_CASE("gauge change shifts the generator by an exact derivative") {
  // phi -> e^{i f(t)} phi adds i f'(t); around a loop with f(1) = f(0) the
  // added term integrates to zero up to the finite-difference error of the
  // sampled derivative, which must shrink at 2nd order.
  auto gauge_shift = [](int n) {
    VectorSection plain = latitude_loop(kPi / 4.0, n, false);
    VectorSection dressed = plain;
    for (int k = 0; k < dressed.size(); ++k) {
      const double t = dressed.ts[k];
      dressed.phis[k] *= std::exp(kI * (0.4 * std::sin(2.0 * kPi * t)));
    }
    const Complex base =
        integrate_samples(berry_connection(plain), plain.dt());
    const Complex moved =
        integrate_samples(berry_connection(dressed), dressed.dt());
    return std::abs(base - moved);
  };
  const double e1 = gauge_shift(500), e2 = gauge_shift(1000);
  CHECK(e1 < 5e-5);
  CHECK(std::log2(e1 / e2) > 1.8);
}

TEST_CASE("short sections are rejected") {
  VectorSection sec;
  sec.ts = {0.0, 1.0};
  sec.phis = {ComplexVector::Ones(2), ComplexVector::Ones(2)};
  CHECK_THROWS_WITH_AS(berry_connection(sec), doctest::Contains("path too short"),
                       std::invalid_argument);
}

TEST_CASE("unnormalized sections: amplitude holonomy is trivial") {
  // Scale a closed loop by a positive periodic envelope.  Re a integrates to
  // (log envelope)' whose loop integral vanishes; Im a keeps the phase.
  VectorSection sec = latitude_loop(kPi / 3.0, 400, true);
  for (int k = 0; k < sec.size(); ++k) {
    const double t = sec.ts[k];
    sec.phis[k] *= 1.0 + 0.5 * std::sin(2.0 * kPi * t) * std::sin(2.0 * kPi * t);
  }
  const DissipativeConnection conn = dissipative_generator(sec);
  const double re_loop = integrate_samples(conn.re_a, sec.dt());
  CHECK(std::abs(re_loop) < 1e-8);
  const Complex full = integrate_samples(conn.a, sec.dt());
  CHECK(std::abs(full.imag() + 1.57079632679425) < 1e-4);

  sec.phis[3].setZero();
  CHECK_THROWS_WITH_AS(dissipative_generator(sec),
                       doctest::Contains("degenerate section"),
                       std::invalid_argument);
}

TEST_CASE("series_derivative is second order at ends and interior") {
  auto run = [](int n) {
    const double dt = 1.0 / n;
    std::vector<ComplexVector> ys;
    for (int k = 0; k <= n; ++k) {
      const double t = k * dt;
      ComplexVector v(1);
      v(0) = std::exp(Complex(0.3, 1.7) * t);
      ys.push_back(v);
    }
    const auto dy = series_derivative(ys, dt);
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double t = k * dt;
      const Complex want = Complex(0.3, 1.7) * std::exp(Complex(0.3, 1.7) * t);
      worst = std::max(worst, std::abs(dy[k](0) - want));
    }
    return worst;
  };
  const double e1 = run(40), e2 = run(80);
  const double order = std::log2(e1 / e2);
  CHECK(order > 1.8);
}

TEST_CASE("trapezoid integration is spectrally accurate on periodic data") {
  const int n = 32;
  std::vector<double> ys;
  for (int k = 0; k <= n; ++k) {
    const double t = 2.0 * kPi * k / n;
    ys.push_back(1.0 + std::cos(3.0 * t));  // mean 1 over the period
  }
  CHECK(integrate_samples(ys, 2.0 * kPi / n) ==
        doctest::Approx(2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("ordered exponential matches closed forms") {
  // Constant generator: G = exp(-W T).
  ComplexMatrix w(2, 2);
  w << Complex(0.1, 0.2), Complex(0.0, 0.5), Complex(-0.3, 0.0),
      Complex(0.0, -0.1);
  std::vector<ComplexMatrix> samples(9, w);
  const double dt = 0.25;  // T = 2
  const ComplexMatrix g = path_ordered_exp(samples, dt, /*substeps=*/16);
  CHECK((g - matrix_exp(-2.0 * w)).norm() < 1e-10);

  // Commuting time dependence: G = exp(-∫ w(t) dt) for scalar modulation.
  auto wt = [&w](double t) { return ComplexMatrix(std::sin(t) * w); };
  const ComplexMatrix g2 = path_ordered_exp(wt, 0.0, 2.0, 400);
  const double integral = 1.0 - std::cos(2.0);
  CHECK((g2 - matrix_exp(-integral * w)).norm() < 1e-10);
}

TEST_CASE("ordered exponential composes contravariantly across segments") {
  // Frozen reference (tests/oracle/matrix_reference.py): two constant
  // generators applied on consecutive unit intervals give
  // G = expm(-A2) expm(-A1).
  ComplexMatrix a1(2, 2), a2(2, 2);
  a1 << Complex(0.0, 0.2), Complex(0.3, 0.0), Complex(-0.3, 0.0),
      Complex(0.0, -0.2);
  a2 << Complex(0.1, 0.0), Complex(0.0, 0.5), Complex(0.0, 0.5),
      Complex(-0.1, 0.0);
  ComplexMatrix want(2, 2);
  want << Complex(0.73577281608721712, -0.29485153358481642),
      Complex(-0.13684172357290181, -0.44935982801882912),
      Complex(0.19322983005985364, -0.44935982801882923),
      Complex(0.91551674729474875, 0.33244360457611771);

  const std::vector<ComplexMatrix> seg1(17, a1), seg2(17, a2);
  const ComplexMatrix g1 = path_ordered_exp(seg1, 1.0 / 16.0, /*substeps=*/8);
  const ComplexMatrix g2 = path_ordered_exp(seg2, 1.0 / 16.0, /*substeps=*/8);
  CHECK((g2 * g1 - want).norm() < 1e-10);
}

TEST_CASE("cubic interpolation hits nodes exactly and is 4th order") {
  auto midpoint_error = [](int n) {
    std::vector<ComplexMatrix> samples;
    for (int k = 0; k <= n; ++k) {
      ComplexMatrix m(1, 1);
      m(0, 0) = std::exp(Complex(0.0, 2.0) * (static_cast<double>(k) / n));
      samples.push_back(m);
    }
    const double node = (cubic_sample(samples, n / 2) - samples[n / 2]).norm();
    const Complex mid = cubic_sample(samples, n / 2 + 0.5)(0, 0);
    const Complex want =
        std::exp(Complex(0.0, 2.0) * ((n / 2 + 0.5) / static_cast<double>(n)));
    return std::pair<double, double>(node, std::abs(mid - want));
  };
  const auto [node20, e20] = midpoint_error(20);
  const auto [node40, e40] = midpoint_error(40);
  CHECK(node20 < 1e-14);
  CHECK(node40 < 1e-14);
  CHECK(e20 < 1e-5);
  CHECK(e40 < e20 / 8.0);  // 4th order: exact ratio 16
}
