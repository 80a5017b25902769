"""Integration engines for the index formulas.

Four routes live here: the punctured-plane area integral (Connes area
formula), the reduced 4D covariant index integral, a 6D Monte Carlo
cross-check of the unreduced triple integral, and plain diagonal traces.
All deterministic engines use fixed node sets; the Monte Carlo engine uses
chunked, index-ordered reduction so a given seed reproduces bitwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from fluxlab.gauge import GaugeUnitary
from fluxlab.landau import CovariantKernel, polar_disk_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureSpec:
    """Engine parameters; None means the operation picks its own default.

    outer_radius bounds the integration domain (disk radius or box
    half-side depending on the engine), puncture_radius the removed disks
    around singular points.  target_tol is the acceptance threshold for the
    engine's own error estimate (tail bound, imaginary residual, or Monte
    Carlo standard error).
    """

    outer_radius: Optional[float] = None
    puncture_radius: float = 1e-3
    radial_nodes: Optional[int] = None
    angular_nodes: Optional[int] = None
    mc_samples: int = 10_000_000
    seed: int = 0
    target_tol: Optional[float] = None


@dataclass(frozen=True)
class Triangle:
    """Oriented triangle; vertices are planar points."""

    a: tuple
    b: tuple
    c: tuple

    def oriented_area_twice(self) -> float:
        """a^b + b^c + c^a with x^y = x1 y2 - x2 y1 (twice the signed area)."""
        a, b, c = (np.asarray(v, dtype=float) for v in (self.a, self.b, self.c))
        return float(_wedge(a, b) + _wedge(b, c) + _wedge(c, a))

    def vertices_complex(self) -> tuple:
        return tuple(complex(v[0], v[1]) for v in (self.a, self.b, self.c))


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Monte Carlo value with sampling diagnostics.

    std_error is the standard error of the real part (the quantity carrying
    the index); the imaginary part of value is the residual left by the
    Hermitian symmetry of the integrand.
    """

    value: complex
    std_error: float
    samples: int
    max_weight: float

    def deviation(self, reference: float) -> float:
        """|Re(value) - reference| in units of the standard error."""
        if self.std_error == 0.0:
            return 0.0 if self.value.real == reference else math.inf
        return abs(self.value.real - reference) / self.std_error


def _wedge(x, y):
    return x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]


def _points(z: np.ndarray) -> np.ndarray:
    return np.stack([np.real(z), np.imag(z)], axis=-1)


def _smooth_step(r, r1, r2):
    """C-infinity transition: 1 for r <= r1, 0 for r >= r2."""
    t = np.clip((r - r1) / (r2 - r1), 0.0, 1.0)
    out = np.zeros_like(t)
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    fa = np.exp(-1.0 / tm)
    fb = np.exp(-1.0 / (1.0 - tm))
    out[mid] = fb / (fa + fb)
    out[t <= 0.0] = 1.0
    return out


def _triple_ratio_integrand(u: GaugeUnitary, z: np.ndarray, a: complex,
                            b: complex, c: complex) -> np.ndarray:
    ua = u.evaluate(_points(z - a))
    ub = u.evaluate(_points(z - b))
    uc = u.evaluate(_points(z - c))
    return (1.0 - ua / ub) * (1.0 - ub / uc) * (1.0 - uc / ua)


def connes_area(u: GaugeUnitary, tri: Triangle, spec: QuadratureSpec = None) -> complex:
    """Punctured-plane integral whose value is 2 pi i N(u) (a^b + b^c + c^a).

    The plane splits into three regions: small patches around each singular
    point handled in local polar coordinates under a smooth partition of
    unity, the mollified remainder of a disk containing all singularities,
    and a log-radial far field out to a radius where the Lipschitz tail
    bound of the integrand (decay like 1/|x|^3) falls below target_tol.
    The tail bound and the removed-ball bound are checked, not assumed.
    """
    if spec is None:
        spec = QuadratureSpec()
    eps = spec.puncture_radius
    tol = spec.target_tol if spec.target_tol is not None else 1e-4
    nr_glob = spec.radial_nodes if spec.radial_nodes is not None else 320
    nth_glob = spec.angular_nodes if spec.angular_nodes is not None else 512

    a, b, c = tri.vertices_complex()
    if a == b or b == c or c == a:
        # a repeated vertex kills one ratio factor identically
        return 0.0 + 0.0j
    sing = complex(u.singularity[0], u.singularity[1])
    punct = np.array([a + sing, b + sing, c + sing])
    d12, d23, d31 = abs(a - b), abs(b - c), abs(c - a)
    dmin, dmax = min(d12, d23, d31), max(d12, d23, d31)
    if eps >= 0.1 * dmin:
        raise ValueError(
            f"puncture radius {eps:.2e} too large for singularity separation "
            f"{dmin:.3f}; need eps < 0.1 * separation"
        )

    rho = min(0.45 * dmin, 2.0)
    r1, r2 = 0.4 * rho, 0.95 * rho
    c0 = punct.mean()
    R0 = max(abs(punct - c0)) + rho + 4.0
    pmax = float(max(abs(punct)))
    C1 = u.lipschitz_c1

    if spec.outer_radius is not None:
        Rfar = spec.outer_radius
        if Rfar < 10.0 * pmax:
            raise ValueError(
                f"outer radius {Rfar:.2f} below 10x the largest singularity "
                f"coordinate {pmax:.2f}"
            )
        Rfar = max(Rfar, 1.02 * R0)
    else:
        Rfar = max(pmax + 4.0 * np.pi * C1 ** 3 * d12 * d23 * d31 / tol,
                   10.0 * pmax, 1.5 * R0)

    total = 0.0 + 0.0j

    # patches: local polar around each singular point, weighted by the bump
    xr, wr = leggauss(40)
    r = eps + 0.5 * (r2 - eps) * (xr + 1.0)
    wrad = 0.5 * (r2 - eps) * wr
    nth_patch = 128
    th = 2.0 * np.pi * np.arange(nth_patch) / nth_patch
    zloc = r[:, None] * np.exp(1j * th)[None, :]
    chi = _smooth_step(r, r1, r2)[:, None]
    wpatch = (wrad * r)[:, None] * (2.0 * np.pi / nth_patch)
    for v in punct:
        total += np.sum(wpatch * chi * _triple_ratio_integrand(u, v + zloc, a, b, c))

    # mollified global disk around the centroid
    xr, wr = leggauss(nr_glob)
    rg = 0.5 * R0 * (xr + 1.0)
    wg = 0.5 * R0 * wr
    thg = 2.0 * np.pi * np.arange(nth_glob) / nth_glob
    z = c0 + rg[:, None] * np.exp(1j * thg)[None, :]
    w2 = (wg * rg)[:, None] * (2.0 * np.pi / nth_glob)
    mol = np.ones(z.shape)
    for v in punct:
        mol *= 1.0 - _smooth_step(np.abs(z - v), r1, r2)
    total += np.sum(w2 * mol * _triple_ratio_integrand(u, z, a, b, c))

    # far field: log-radial Gauss nodes on [R0, Rfar], r dr = r^2 d(log r)
    ndec = int(np.ceil(np.log10(Rfar / R0) * 14.0)) + 8
    xs, ws = leggauss(ndec)
    span = np.log(Rfar) - np.log(R0)
    s = 0.5 * span * (xs + 1.0) + np.log(R0)
    wsl = 0.5 * span * ws
    rfar = np.exp(s)
    nth_far = 256
    thf = 2.0 * np.pi * np.arange(nth_far) / nth_far
    zf = c0 + rfar[:, None] * np.exp(1j * thf)[None, :]
    w3 = (wsl * rfar ** 2)[:, None] * (2.0 * np.pi / nth_far)
    total += np.sum(w3 * _triple_ratio_integrand(u, zf, a, b, c))

    tail = 2.0 * np.pi * C1 ** 3 * d12 * d23 * d31 * (
        1.0 / (Rfar - pmax) + pmax / (2.0 * (Rfar - pmax) ** 2))
    ball = 3.0 * 8.0 * np.pi * eps ** 2
    logger.debug("connes_area tail bound %.2e, removed-ball bound %.2e, Rfar %.1f",
                 tail, ball, Rfar)
    if tail > tol:
        raise ValueError(
            f"far-field tail bound {tail:.2e} exceeds target {tol:.1e}; "
            "outer radius too small"
        )
    return complex(total)


def _square_grid(half_side: float, nodes_per_axis: int):
    """Tensorized Gauss-Legendre nodes on [-L, L]^2 with product weights."""
    x, w = leggauss(nodes_per_axis)
    x = x * half_side
    w = w * half_side
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    nodes = np.column_stack([X1.ravel(), X2.ravel()])
    return nodes, np.outer(w, w).ravel()


def weighted_triple_kernel(p: CovariantKernel, nodes: np.ndarray,
                           weights: np.ndarray) -> np.ndarray:
    """Matrix T_jk = w_j w_k p(0, x_j) p(x_j, x_k) p(x_k, 0).

    Bilinear forms against this matrix evaluate 4D integrals of the cyclic
    kernel triple product; it is the common core of the index and transport
    integrals.  Assembled in place to hold one N x N complex buffer.
    """
    origin = np.zeros((1, 2))
    t0 = p.pair_matrix(origin, nodes)[0]
    T = p.pair_matrix(nodes, nodes)
    T *= (t0 * weights)[:, None]
    T *= (np.conj(t0) * weights)[None, :]
    return T


def index_integral_4d(p: CovariantKernel, winding: int,
                      spec: QuadratureSpec = None) -> complex:
    """-2 pi i * winding * integral of p(0,x) p(x,y) p(y,0) x^y over the plane.

    The covariance of the kernel reduces the index integral to this 4D form;
    winding enters only as the prefactor.  The exact value is real for a
    Hermitian kernel, so the imaginary part of the result is a pure residual
    and is checked against target_tol.
    """
    if int(winding) != winding:
        raise ValueError(f"winding must be an integer, got {winding}")
    winding = int(winding)
    if spec is None:
        spec = QuadratureSpec()
    level = getattr(p, "level", 0)
    R = spec.outer_radius if spec.outer_radius is not None else 7.0 + 1.5 * level
    n = spec.radial_nodes if spec.radial_nodes is not None else 46 + 8 * level
    tol = spec.target_tol if spec.target_tol is not None else 1e-8
    if winding == 0:
        return 0.0 + 0.0j
    nodes, W = _square_grid(R, n)
    T = weighted_triple_kernel(p, nodes, W)
    wedge = np.einsum("i,j->ij", nodes[:, 0], nodes[:, 1])
    wedge -= wedge.T
    J = np.einsum("ij,ij->", T, wedge)
    value = -2.0j * np.pi * winding * J
    resid = abs(value.imag)
    if resid > tol:
        raise ValueError(
            f"imaginary residual {resid:.2e} of the index integral exceeds "
            f"{tol:.1e}; quadrature did not converge"
        )
    return complex(value)


# Monte Carlo proposal constants: center-of-mass radius follows the
# heavy-tail law matching the 1/|x|^3 integrand decay; the two edge vectors
# follow the gaussian matched to the kernel-product exponent
# |r1|^2 + |r2|^2 - r1.r2, inflated 1.25x to keep weights bounded.
_MC_COM_SCALE = 2.0
_MC_VAR1 = (2.0 / 3.0) * 1.25
_MC_VAR2 = 0.5 * 1.25
_MC_CHUNK_PAIRS = 125_000


def _mc_chunk(p: CovariantKernel, u: GaugeUnitary, n_pairs: int, rng):
    s0 = _MC_COM_SCALE
    U = rng.random(n_pairs)
    phi = 2.0 * np.pi * rng.random(n_pairs)
    g = rng.standard_normal((n_pairs, 4))
    rho = s0 * np.sqrt(1.0 / (1.0 - U) ** 2 - 1.0)
    xr = np.column_stack([rho * np.cos(phi), rho * np.sin(phi)])
    r1 = math.sqrt(_MC_VAR1) * g[:, 0:2]
    r2 = 0.5 * r1 + math.sqrt(_MC_VAR2) * g[:, 2:4]
    pdf_x = s0 / (2.0 * np.pi * (s0 ** 2 + rho ** 2) ** 1.5)
    q1 = np.sum(r1 * r1, axis=1)
    dq = r2 - 0.5 * r1
    q2 = np.sum(dq * dq, axis=1)
    pdf_r = (np.exp(-q1 / (2.0 * _MC_VAR1)) / (2.0 * np.pi * _MC_VAR1)
             * np.exp(-q2 / (2.0 * _MC_VAR2)) / (2.0 * np.pi * _MC_VAR2))
    inv_pdf = 1.0 / (pdf_x * pdf_r)
    sing = np.asarray(u.singularity, dtype=float)

    both = []
    max_w = 0.0
    for sgn in (1.0, -1.0):
        xrel = sgn * xr
        v1 = sing + xrel
        v2 = v1 + r1
        v3 = v1 + r2
        T = p.evaluate(v1, v2) * p.evaluate(v2, v3) * p.evaluate(v3, v1)
        if u.flux_power is not None:
            # phase differences of (z/|z|)^alpha by planar geometry: stable
            # for triangles far from the singularity, where direct complex
            # evaluation would difference two nearly equal angles
            alpha = u.flux_power
            rho2 = np.sum(xrel * xrel, axis=1)
            d1 = np.arctan2(_wedge(xrel, r1), rho2 + np.sum(xrel * r1, axis=1))
            d2 = np.arctan2(_wedge(xrel, r2 - r1) + _wedge(r1, r2),
                            rho2 + np.sum(xrel * (r1 + r2), axis=1)
                            + np.sum(r1 * r2, axis=1))
            d3 = np.arctan2(-_wedge(xrel, r2), rho2 + np.sum(xrel * r2, axis=1))
            Wfac = 2.0j * (np.sin(alpha * d1) + np.sin(alpha * d2)
                           + np.sin(alpha * d3))
        else:
            u1 = u.evaluate(v1)
            u2 = u.evaluate(v2)
            u3 = u.evaluate(v3)
            Wfac = ((1.0 - u1 * np.conj(u2)) * (1.0 - u2 * np.conj(u3))
                    * (1.0 - u3 * np.conj(u1)))
        w = T * Wfac * inv_pdf
        max_w = max(max_w, float(np.max(np.abs(w))))
        both.append(w)
    pair_mean = 0.5 * (both[0] + both[1])
    return (complex(np.sum(pair_mean)),
            float(np.sum(pair_mean.real ** 2)),
            max_w)


def index_integral_6d_mc(p: CovariantKernel, u: GaugeUnitary,
                         spec: QuadratureSpec = None) -> MonteCarloEstimate:
    """Monte Carlo estimate of the full 6D difference-cube trace integral.

    Estimates the integral of p(x,y) p(y,z) p(z,x) (1 - u(x) conj u(y))
    (1 - u(y) conj u(z)) (1 - u(z) conj u(x)) over three planar variables,
    the unreduced form whose value equals the trace of (P - uPu*)^3.
    Antithetic reflection of the base point through the singularity halves
    the variance contributed by odd modes; reduction is chunked and ordered,
    so fixed (seed, mc_samples) reproduce the estimate bitwise.
    """
    if spec is None:
        spec = QuadratureSpec()
    if u.flux_power == 0:
        # constant unitary: every ratio factor is exactly zero
        return MonteCarloEstimate(value=0j, std_error=0.0, samples=0, max_weight=0.0)
    n_pairs_total = max(1, (spec.mc_samples + 1) // 2)
    n_chunks = (n_pairs_total + _MC_CHUNK_PAIRS - 1) // _MC_CHUNK_PAIRS
    children = np.random.SeedSequence(spec.seed).spawn(n_chunks)
    sums = []
    sums_re2 = []
    max_w = 0.0
    done = 0
    for i in range(n_chunks):
        n_here = min(_MC_CHUNK_PAIRS, n_pairs_total - done)
        s, s2, mw = _mc_chunk(p, u, n_here, np.random.default_rng(children[i]))
        sums.append(s)
        sums_re2.append(s2)
        max_w = max(max_w, mw)
        done += n_here
    total = sum(sums)
    total_re2 = sum(sums_re2)
    mean = total / done
    var = max(total_re2 / done - mean.real ** 2, 0.0)
    std_error = math.sqrt(var / done)
    est = MonteCarloEstimate(value=mean, std_error=std_error,
                             samples=2 * done, max_weight=max_w)
    if spec.target_tol is not None and std_error > spec.target_tol:
        raise ValueError(
            f"standard error {std_error:.2e} above target {spec.target_tol:.1e} "
            f"after {est.samples} samples"
        )
    return est


def trace_from_diagonal(k, radius: float, radial_nodes: int = 96,
                        angular_nodes: int = 160) -> complex:
    """Integral of k(x, x) over the disk of the given radius.

    For trace-class kernels this is the trace; for the difference kernel
    p(x,y)(1 - u(x) conj u(y)) it vanishes identically because the diagonal
    factor 1 - |u|^2 is zero pointwise.
    """
    grid = polar_disk_grid(radius, radial_nodes, angular_nodes)
    vals = k(grid.nodes, grid.nodes)
    return complex(np.sum(grid.weights * vals))
