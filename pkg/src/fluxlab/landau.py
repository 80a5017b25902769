"""Landau-level machinery: basis states, projection kernels, flux matrices.

Everything is expressed in symmetric-gauge coordinates scaled so the field
strength is 2: the level-m projection kernel is then
p_m(x, y) = exp(-i x^y) q_m(|y-x|^2) exp(-|y-x|^2 / 2) with x^y the planar
cross product, q_m a degree-m polynomial with q_m(0) = 1/pi, and the density
of states per unit area is 1/pi.  Raising operators are applied symbolically
once and the resulting monomial coefficient tables are cached.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from fluxlab.gauge import GaugeUnitary
from fluxlab.projpair import HermitianProjection

logger = logging.getLogger(__name__)

_NORMALIZATION_NOTED = set()


@lru_cache(maxsize=None)
def _raised_monomials(n: int, m: int) -> tuple:
    """Coefficient table of the polynomial part of the (n, m) state.

    The state is a polynomial in (z, conj z) times exp(-|z|^2/2), obtained by
    applying the raising operator m times to z^n exp(-|z|^2/2).  On the
    polynomial part one application acts as q -> -dq/dz + conj(z) q.  Returns
    ((a, b, coeff), ...) for the monomials coeff * z^a * conj(z)^b.
    """
    terms = {(n, 0): 1.0}
    for _ in range(m):
        nxt = {}
        for (a, b), c in terms.items():
            if a >= 1:
                key = (a - 1, b)
                nxt[key] = nxt.get(key, 0.0) - c * a
            key = (a, b + 1)
            nxt[key] = nxt.get(key, 0.0) + c
        terms = nxt
    return tuple(sorted((a, b, c) for (a, b), c in terms.items()))


def _norm_constant(n: int, m: int) -> float:
    # Numerically enforced normalization: the squared plane-integral norm of
    # the raised state is pi * n! * m!.
    return 1.0 / math.sqrt(math.pi * math.factorial(n) * math.factorial(m))


def _note_normalization(n: int, m: int):
    if m >= 1 and (n, m) not in _NORMALIZATION_NOTED:
        _NORMALIZATION_NOTED.add((n, m))
        logger.info(
            "normalization of state (n=%d, m=%d) enforced numerically as "
            "(pi n! m!)^(-1/2); the (m+1)! variant fails the norm identity",
            n, m,
        )


def _as_complex_points(z) -> np.ndarray:
    z = np.asarray(z)
    if z.ndim >= 1 and z.shape[-1] == 2 and not np.iscomplexobj(z):
        return z[..., 0] + 1j * z[..., 1]
    return z.astype(complex)


def basis_wavefunction(n: int, m: int, z) -> np.ndarray:
    """Normalized level-m angular-momentum-n state at z (complex or (..,2)).

    Normalization is enforced numerically (unit norm under the plane
    integral), giving the constant (pi n! m!)^(-1/2).
    """
    if n < 0 or m < 0:
        raise ValueError(f"state indices must be nonnegative, got n={n}, m={m}")
    _note_normalization(n, m)
    zc = _as_complex_points(z)
    zb = np.conj(zc)
    val = np.zeros_like(zc, dtype=complex)
    for a, b, c in _raised_monomials(n, m):
        val = val + c * zc ** a * zb ** b
    return _norm_constant(n, m) * val * np.exp(-np.abs(zc) ** 2 / 2.0)


@lru_cache(maxsize=None)
def _kernel_radial_coeffs(m: int) -> tuple:
    """Coefficients r_k with p_m(0, z) = sum_k r_k t^k exp(-t/2), t = |z|^2.

    Derived from the (m, m) state table: only that state is nonzero at the
    origin, so the kernel at the origin is psi(0) * conj(psi(z)), whose
    polynomial part depends on t alone.
    """
    coeffs = np.zeros(m + 1)
    for a, b, c in _raised_monomials(m, m):
        if a != b:
            raise AssertionError("diagonal state table must be radial")
        coeffs[a] += c
    norm_sq = 1.0 / (math.pi * math.factorial(m) ** 2)
    return tuple(norm_sq * coeffs[0] * coeffs)


@dataclass(frozen=True)
class LandauBasis:
    """Level-m basis truncated at angular momentum max_angular.

    The field strength is fixed to 2 by the internal coordinate scaling;
    physical field values are handled by rescaling coordinates at the
    command-line layer.
    """

    level: int
    max_angular: int
    field_b: float = field(default=2.0, init=False)

    def states(self) -> list:
        return [(n, self.level) for n in range(self.max_angular + 1)]


@dataclass(frozen=True)
class CovariantKernel:
    """Projection kernel p(x, y), translation invariant up to a gauge phase.

    evaluate broadcasts over trailing-dimension-2 point arrays.  The envelope
    metadata records the gaussian decay p ~ exp(-gaussian_rate |x-y|^2);
    integration engines use it to size their grids and proposals.
    """

    level: int
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gaussian_rate: float = 0.5
    diagonal_value: float = 1.0 / math.pi

    def __call__(self, x, y) -> np.ndarray:
        return self.evaluate(x, y)

    def pair_matrix(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """All-pairs kernel matrix for node sets X (N,2) and Y (K,2)."""
        return self.evaluate(X[:, None, :], Y[None, :, :])


def landau_kernel(m: int, n_max: int = 40) -> CovariantKernel:
    """Closed-form level-m projection kernel.

    The closed form comes from the cached coefficient tables; n_max is the
    angular cutoff at which the basis-sum oracle reproduces it (the omitted
    tail is below 1e-12 inside the working radius for n_max = 40).
    """
    if m < 0:
        raise ValueError(f"level must be nonnegative, got {m}")
    radial = np.array(_kernel_radial_coeffs(m))

    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        wedge = x[..., 0] * y[..., 1] - x[..., 1] * y[..., 0]
        d1 = y[..., 0] - x[..., 0]
        d2 = y[..., 1] - x[..., 1]
        t = d1 * d1 + d2 * d2
        poly = np.zeros_like(t)
        for c in radial[::-1]:
            poly = poly * t + c
        return np.exp(-1j * wedge) * poly * np.exp(-t / 2.0)

    return CovariantKernel(level=m, evaluate=evaluate, gaussian_rate=0.5,
                           diagonal_value=float(radial[0]))


def real_surrogate_kernel() -> CovariantKernel:
    """Real gaussian control kernel (1/pi) exp(-|x-y|^2/2).

    Time-reversal invariant (real symmetric), so every index quantity built
    from it must vanish.  It is not a reproducing projection kernel; it
    exists purely as the symmetry control.
    """

    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        d1 = y[..., 0] - x[..., 0]
        d2 = y[..., 1] - x[..., 1]
        t = d1 * d1 + d2 * d2
        return (1.0 / math.pi) * np.exp(-t / 2.0)

    return CovariantKernel(level=0, evaluate=evaluate, gaussian_rate=0.5)


def _radial_angular_grid(t_max: float, radial_nodes: int, angular_nodes: int):
    """Quadrature for plane integrals of gaussian-weighted trig polynomials.

    Radial direction substitutes t = r^2 (area element becomes dt/2) with
    Gauss-Legendre nodes on [0, t_max]; the angular direction is a uniform
    trapezoid, exact for trigonometric polynomials below the node count.
    """
    xs, ws = leggauss(radial_nodes)
    t = 0.5 * t_max * (xs + 1.0)
    wt = 0.5 * t_max * ws
    theta = 2.0 * np.pi * np.arange(angular_nodes) / angular_nodes
    z = np.sqrt(t)[:, None] * np.exp(1j * theta)[None, :]
    w = np.repeat(wt * 0.5, angular_nodes) * (2.0 * np.pi / angular_nodes)
    return z.ravel(), w


def gram_matrix(m1: int, m2: int, n_max: int,
                radial_nodes: int = 0, angular_nodes: int = 256) -> np.ndarray:
    """Quadrature Gram matrix between levels m1 and m2, angular momenta
    0..n_max.  Identity for m1 = m2, zero for m1 != m2."""
    t_max = 2.0 * (n_max + m1 + m2) + 60.0
    if radial_nodes == 0:
        radial_nodes = max(160, int(1.5 * t_max))
    z, w = _radial_angular_grid(t_max, radial_nodes, angular_nodes)
    psi1 = np.column_stack([basis_wavefunction(n, m1, z) for n in range(n_max + 1)])
    psi2 = np.column_stack([basis_wavefunction(n, m2, z) for n in range(n_max + 1)])
    return psi1.conj().T @ (w[:, None] * psi2)


def flux_matrix(m: int, n_max: int, angular_nodes: int = 256,
                pattern_tol: float = 1e-8) -> np.ndarray:
    """Matrix of the unit flux unitary z/|z| between level-m states.

    Angular momentum selection confines the matrix to the single diagonal
    offset column = row - 1; the off-pattern residual is checked against
    pattern_tol and reported on failure.
    """
    if m < 0 or n_max < 0:
        raise ValueError("level and angular cutoff must be nonnegative")
    t_max = 2.0 * (n_max + 2 * m) + 60.0
    radial_nodes = max(160, int(1.5 * t_max))
    # the unitary brings odd powers of r into the integrand, so integrate in
    # r itself (entire integrand, spectral convergence) rather than t = r^2
    r_max = np.sqrt(t_max)
    xs, ws = leggauss(radial_nodes)
    r = 0.5 * r_max * (xs + 1.0)
    wr = 0.5 * r_max * ws
    theta = 2.0 * np.pi * np.arange(angular_nodes) / angular_nodes
    z = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w = np.repeat(wr * r, angular_nodes) * (2.0 * np.pi / angular_nodes)
    u = z / np.abs(z)
    psi = np.column_stack([basis_wavefunction(n, m, z) for n in range(n_max + 1)])
    mat = psi.conj().T @ ((w * u)[:, None] * psi)
    # admissible entries sit at (n, n') = (k+1, k)
    pattern = np.eye(n_max + 1, k=-1, dtype=bool)
    resid = float(np.max(np.abs(np.where(pattern, 0.0, mat))))
    if resid > pattern_tol:
        raise ValueError(
            f"flux matrix off-pattern residual {resid:.3e} exceeds {pattern_tol:.1e}; "
            "quadrature did not converge"
        )
    return mat


def shift_index(M: np.ndarray, zero_tol: float = 1e-8) -> int:
    """Fredholm index of the semi-infinite shift operator truncated as M.

    Scans all diagonal offsets for the unique one carrying every entry above
    zero_tol and returns that offset (column minus row).  A matrix admitting
    no offset is not a shift matrix; one admitting several (the zero matrix)
    is ambiguous.  Both are rejected.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"shift matrix must be square, got {M.shape}")
    dim = M.shape[0]
    rows, cols = np.indices(M.shape)
    offsets = cols - rows
    admissible = []
    for i in range(-(dim - 1), dim):
        off_pattern = np.abs(np.where(offsets == i, 0.0, M))
        if np.max(off_pattern) <= zero_tol:
            admissible.append(i)
    if not admissible:
        raise ValueError("no admissible diagonal offset: not a shift matrix")
    if len(admissible) > 1:
        raise ValueError(
            f"ambiguous shift pattern, admissible offsets {admissible} "
            "(matrix is numerically zero)"
        )
    return admissible[0]


@dataclass(frozen=True)
class DiskGrid:
    """Quadrature nodes and weights covering a disk around the origin."""

    nodes: np.ndarray
    weights: np.ndarray
    radius: float


def polar_disk_grid(radius: float = 8.0, radial_nodes: int = 40,
                    angular_nodes: int = 72) -> DiskGrid:
    """Gauss-Legendre radii times equal angles; weights include the area
    element."""
    xs, ws = leggauss(radial_nodes)
    r = 0.5 * radius * (xs + 1.0)
    wr = 0.5 * radius * ws * r
    theta = 2.0 * np.pi * np.arange(angular_nodes) / angular_nodes
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    nodes = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
    weights = np.repeat(wr, angular_nodes) * (2.0 * np.pi / angular_nodes)
    return DiskGrid(nodes=nodes, weights=weights, radius=radius)


def truncated_projection_pair(m: int, u: GaugeUnitary, grid: DiskGrid = None,
                              residual_threshold: float = 0.05):
    """Disk truncation of the level-m projection and its flux conjugate.

    Returns (P, Q) with P the quadrature-symmetrized kernel matrix
    sqrt(w_j) p(x_j, x_k) sqrt(w_k) and Q = D P D* for the diagonal D of
    u(x_j).  P is only approximately idempotent: the truncation boundary
    carries an eigenvalue cloud between 0 and 1, and that cloud is exactly
    what lets the pair carry a nonzero odd trace (exact finite projections
    related by a unitary always trace to zero).  The measured idempotency
    residual is attached to the returned projections; a residual above
    residual_threshold means the truncation is too coarse and is an error.
    """
    if grid is None:
        grid = polar_disk_grid()
    kern = landau_kernel(m)
    nodes, w = grid.nodes, grid.weights
    sw = np.sqrt(w)
    P = kern.pair_matrix(nodes, nodes)
    P *= sw[:, None]
    P *= sw[None, :]
    P = 0.5 * (P + P.conj().T)
    uvals = u.evaluate(nodes)
    if np.any(~np.isfinite(uvals)):
        raise ValueError("gauge unitary is singular on a grid node")
    try:
        proj_p = HermitianProjection(P, idempotency_tol=residual_threshold)
    except ValueError as exc:
        raise ValueError(f"truncation too coarse: {exc}") from None
    Q = (uvals[:, None] * P) * uvals.conj()[None, :]
    Q = 0.5 * (Q + Q.conj().T)
    proj_q = HermitianProjection(Q, idempotency_tol=residual_threshold)
    return proj_p, proj_q
