"""Switch-function Hall transport for covariant projection kernels.

The transported charge is the box limit of -2 pi times the trace of the
adiabatic curvature omega = -i [P L1 P, P L2 P] built from two switch
profiles.  For a covariant kernel everything reduces to bilinear forms
against the cyclic triple-product matrix of the kernel, which this module
shares with the index integrals: transport equals charge deficiency, and the
code asserts that identity across modules rather than assuming it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from fluxlab.gauge import Switch
from fluxlab.landau import CovariantKernel
from fluxlab.quadrature import (QuadratureSpec, _square_grid, index_integral_4d,
                                weighted_triple_kernel)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxRegion:
    """The square [-L, L]^2 used for truncated traces and averages."""

    half_side: float

    def __post_init__(self):
        if self.half_side <= 0:
            raise ValueError(f"box half side must be positive, got {self.half_side}")

    @property
    def area(self) -> float:
        return 4.0 * self.half_side ** 2


@dataclass(frozen=True)
class SwitchPair:
    """The two switch operators entering the curvature commutator.

    Each switch is a function of one coordinate; ``axes`` records which.  By
    default lambda1 varies along x1 and lambda2 along x2.  ``swapped`` returns
    the pair with the commutator order reversed, each operator keeping its
    own axis, so the curvature changes sign exactly.
    """

    lambda1: Switch
    lambda2: Switch
    axes: tuple = (0, 1)

    def __post_init__(self):
        if sorted(self.axes) != [0, 1]:
            raise ValueError(f"axes must be a permutation of (0, 1), got {self.axes}")

    def swapped(self) -> "SwitchPair":
        return SwitchPair(self.lambda2, self.lambda1,
                          axes=(self.axes[1], self.axes[0]))


def switch_integral_1d(s: Switch, a: float, nodes: int = 800) -> float:
    """Integral of s(x + a) - s(x) over the line; equals a for any switch.

    The integrand decays at the switch's tail rate, so Gauss-Legendre on a
    window [-T, T] sized from the scale converges to machine precision; the
    neglected tail is bounded by |a| times the switch variation beyond T and
    checked.
    """
    T = 50.0 * s.scale + abs(a) + abs(s.center)
    x, w = leggauss(nodes)
    x = x * T
    value = float(np.sum(w * T * (s.evaluate(x + a) - s.evaluate(x))))
    tail = abs(a) * float((1.0 - s.evaluate(T - abs(a))) + s.evaluate(-T + abs(a)))
    if tail > 1e-10 * max(1.0, abs(a)):
        raise ValueError(f"tail truncation {tail:.2e} above tolerance; window too small")
    return value


def switch_integral_2d(pair: SwitchPair, a, b) -> float:
    """Antisymmetrized 2D switch-difference integral; equals a^b.

    The integrand is a product of one-variable differences, so the double
    integral factors exactly into products of 1D integrals, antisymmetrized
    between the two axes.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (switch_integral_1d(pair.lambda1, float(a[0]))
            * switch_integral_1d(pair.lambda2, float(b[1]))
            - switch_integral_1d(pair.lambda1, float(b[0]))
            * switch_integral_1d(pair.lambda2, float(a[1])))


def _transport_grid(p: CovariantKernel, spec: Optional[QuadratureSpec]):
    level = getattr(p, "level", 0)
    R = 7.5 + 1.5 * level
    n = 52 + 8 * level
    if spec is not None:
        if spec.outer_radius is not None:
            R = spec.outer_radius
        if spec.radial_nodes is not None:
            n = spec.radial_nodes
    return _square_grid(R, n)


def curvature_diagonal(p: CovariantKernel, pair: SwitchPair, x,
                       spec: QuadratureSpec = None) -> complex:
    """Diagonal value omega(x, x) of the adiabatic curvature -i [PL1P, PL2P].

    Using P^2 = P, each commutator ordering is a double kernel integral
    p(x,y) L(y) p(y,z) L(z) p(z,x); the quadrature nodes are recentered on x
    so the gaussian support of the kernel products is always covered.
    Switches are evaluated at absolute coordinates, exactly as given.
    """
    x = np.asarray(x, dtype=float).reshape(1, 2)
    nodes, W = _transport_grid(p, spec)
    Y = nodes + x
    tx = p.pair_matrix(x, Y)[0]
    Ta = p.pair_matrix(Y, Y)
    Ta *= (tx * W)[:, None]
    Ta *= (np.conj(tx) * W)[None, :]
    l1 = np.asarray(pair.lambda1.evaluate(Y[:, pair.axes[0]]), dtype=float)
    l2 = np.asarray(pair.lambda2.evaluate(Y[:, pair.axes[1]]), dtype=float)
    s12 = l1 @ (Ta @ l2)
    s21 = l2 @ (Ta @ l1)
    return -1j * (s12 - s21)


def _box_switch_integrals(s: Switch, coords: np.ndarray, L: float) -> np.ndarray:
    """A(c) = integral over [-L, L] of s(t + c) dt for each node coordinate c."""
    if s.antiderivative is not None:
        F = s.antiderivative
        return np.asarray(F(coords + L) - F(coords - L), dtype=float)
    t, w = leggauss(400)
    t = t * L
    return (s.evaluate(coords[:, None] + t[None, :]) @ (w * L)).astype(float)


def hall_transport_box(p: CovariantKernel, pair: SwitchPair,
                       L_values: Sequence[float] = (2.0, 3.0, 4.5, 6.0),
                       spec: QuadratureSpec = None) -> list:
    """Charge transport from boxed curvature traces, one value per L.

    Computes Q(L) = -2 pi * integral over the box [-L, L]^2 of the curvature
    diagonal.  Covariance turns the box integral of the recentered node frame
    into closed switch integrals A(c) = int_box s(t + c) dt, leaving a single
    bilinear form per L; the sequence converges to the closed-form transport
    at the switch tail rate exp(-2L/scale).
    """
    Ls = [float(L) for L in L_values]
    if any(b <= a for a, b in zip(Ls, Ls[1:])):
        raise ValueError(f"L values must be strictly increasing, got {Ls}")
    nodes, W = _transport_grid(p, spec)
    Tw = weighted_triple_kernel(p, nodes, W)
    out = []
    for L in Ls:
        BoxRegion(L)
        a1 = _box_switch_integrals(pair.lambda1, nodes[:, pair.axes[0]], L)
        a2 = _box_switch_integrals(pair.lambda2, nodes[:, pair.axes[1]], L)
        q = 2.0j * np.pi * (a1 @ (Tw @ a2) - a2 @ (Tw @ a1))
        logger.debug("box transport L=%.2f: %.8f (imag %.1e)", L, q.real, q.imag)
        out.append((L, float(q.real)))
    return out


def _triple_wedge_sum(Tw: np.ndarray, nodes: np.ndarray) -> complex:
    wedge = np.einsum("i,j->ij", nodes[:, 0], nodes[:, 1])
    wedge -= wedge.T
    return complex(np.einsum("ij,ij->", Tw, wedge))


def hall_transport_closed_form(p: CovariantKernel, spec: QuadratureSpec = None,
                               identity_tol: float = 1e-6) -> float:
    """Closed-form transport Q = 2 pi i * triple-product wedge integral.

    The box limit collapses to the 4D integral of p(0,y) p(y,z) p(z,0) (y^z);
    the same integral with opposite prefactor is the charge deficiency, so
    before returning, the transport/deficiency identity Q = -Index is checked
    against the index engine on its own (different) grid.
    """
    nodes, W = _transport_grid(p, spec)
    Tw = weighted_triple_kernel(p, nodes, W)
    q = 2.0j * np.pi * _triple_wedge_sum(Tw, nodes)
    tol = 1e-8
    if spec is not None and spec.target_tol is not None:
        tol = spec.target_tol
    if abs(q.imag) > tol:
        raise ValueError(
            f"imaginary residual {abs(q.imag):.2e} of the transport integral "
            f"exceeds {tol:.1e}"
        )
    deficiency = index_integral_4d(p, winding=1)
    if abs(q.real + deficiency.real) > identity_tol:
        raise RuntimeError(
            "transport/deficiency identity violated: "
            f"Q = {q.real:.9f} but -Index = {-deficiency.real:.9f}"
        )
    return float(q.real)


def kubo_box(p: CovariantKernel, L: float, spec: QuadratureSpec = None) -> float:
    """Box-averaged Kubo conductance; approaches Q / (2 pi) as L grows.

    The antisymmetrized P x1 Pperp x2 P average reduces, for a covariant
    kernel over the symmetric box, to i times the triple-product wedge
    integral: the x-dependent part of the integrand is odd and the box
    average kills it exactly, so L affects the result only through that
    exact cancellation.
    """
    BoxRegion(L)
    nodes, W = _transport_grid(p, spec)
    Tw = weighted_triple_kernel(p, nodes, W)
    val = 1j * _triple_wedge_sum(Tw, nodes)
    return float(val.real)
