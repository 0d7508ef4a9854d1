#!/usr/bin/env python3
"""Reference values for the closed-system baseline tests.

Berry connection of the upper spin-1/2 eigenstate, integrated by dense
quadrature along a latitude loop and over a small rectangle (for the Stokes
cross-check). Outputs are frozen into the C++ tests.
"""
import numpy as np

def upper(theta, phi):
    return np.array([np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0)])

# --- latitude loop, clockwise in phi (phi: 2pi -> 0), theta = pi/3 ---
theta = np.pi / 3.0
n = 4_000_001
phis = np.linspace(2.0 * np.pi, 0.0, n)
dphi = phis[1] - phis[0]
psi = np.stack([upper(theta, p) for p in phis])
dpsi = np.gradient(psi, dphi, axis=0)
a = np.einsum("ki,ki->k", psi.conj(), dpsi)
loop = np.trapezoid(a, dx=dphi)
print(f"latitude theta=pi/3 clockwise: loop integral = ({loop.real:+.15g},{loop.imag:+.15g})")
print(f"analytic -1j*pi*(1-cos(theta)) = {-np.pi * (1.0 - np.cos(theta)):+.15g} j")

# --- Stokes rectangle [1.0, 1.2] x [0.4, 0.6] in (theta, phi) ---
t0, t1, p0, p1 = 1.0, 1.2, 0.4, 0.6
# curvature of the upper branch: a_phi = i sin^2(theta/2), a_theta = 0,
# so d a = (i/2) sin(theta) dtheta ^ dphi
surf = 0.5j * (np.cos(t0) - np.cos(t1)) * (p1 - p0)
print(f"rectangle surface integral (analytic) = ({surf.real:+.15g},{surf.imag:+.15g})")

# boundary circulation by dense quadrature, counterclockwise
m = 2_000_001
def seg(f, a, b):
    s = np.linspace(a, b, m)
    vals = np.stack([f(x) for x in s])
    d = np.gradient(vals, s[1] - s[0], axis=0)
    integrand = np.einsum("ki,ki->k", vals.conj(), d)
    return np.trapezoid(integrand, dx=s[1] - s[0])

tot = seg(lambda t: upper(t, p0), t0, t1)
tot += seg(lambda p: upper(t1, p), p0, p1)
tot += seg(lambda t: upper(t, p1), t1, t0)
tot += seg(lambda p: upper(t0, p), p1, p0)
print(f"rectangle boundary circulation (quadrature) = ({tot.real:+.15g},{tot.imag:+.15g})")
