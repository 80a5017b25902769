"""Relative index of a pair of Hermitian projections.

Three routes are implemented for finite matrices: spectral counting of the
±1 eigenvalues of P − Q, odd-power traces Tr (P − Q)^(2n+1), and the Fedosov
trace difference for the compression of a unitary to the range of P.  For
exact finite-dimensional projections all three agree (and reduce to rank
arithmetic); for truncations of infinite-dimensional pairs the odd traces
converge to the index of the underlying operators while the raw value's
distance to the nearest integer measures the truncation quality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class HermitianProjection:
    """Square complex matrix validated to be Hermitian and idempotent.

    idempotency_tol bounds the allowed max-entry deviation of both M - M†
    and M² - M.  Truncated continuum projections are not exactly idempotent;
    they carry a loose tolerance and the measured residual is kept in
    idempotency_residual.
    """

    matrix: np.ndarray
    idempotency_tol: float = 1e-10
    idempotency_residual: float = field(init=False, default=0.0)

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"projection matrix must be square, got {m.shape}")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > self.idempotency_tol:
            raise ValueError(f"matrix is not Hermitian: max |M - M*| = {herm:.3e}")
        resid = float(np.max(np.abs(m @ m - m)))
        if resid > self.idempotency_tol:
            raise ValueError(
                f"matrix is not idempotent within {self.idempotency_tol:.1e}: "
                f"max |M^2 - M| = {resid:.3e}"
            )
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "idempotency_residual", resid)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix).real)))


@dataclass(frozen=True)
class UnitaryMatrix:
    matrix: np.ndarray
    unitarity_tol: float = 1e-10

    def __post_init__(self):
        u = np.asarray(self.matrix)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"unitary matrix must be square, got {u.shape}")
        resid = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))
        if resid > self.unitarity_tol:
            raise ValueError(f"matrix is not unitary: max |UU* - 1| = {resid:.3e}")
        object.__setattr__(self, "matrix", u)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class IndexReport:
    """Raw index value with its method and distance from the nearest integer.

    Spectral counting always returns an exact integer (residual 0).  Trace
    methods return the raw real value; rounding is left to the caller so that
    truncation error stays visible.  imag_part records the magnitude of the
    imaginary component discarded from the raw trace.
    """

    value: float
    method: str
    trace_power: int
    residual: float
    imag_part: float = 0.0

    def rounded(self) -> int:
        return int(round(self.value))


def _check_same_dim(*mats: np.ndarray):
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")


def index_by_spectral_count(P: HermitianProjection, Q: HermitianProjection,
                            eig_tol: float = 0.5) -> IndexReport:
    """Count eigenvalues of P − Q at +1 minus those at −1.

    Eigenvalues of a difference of projections lie in [−1, 1] and the ±1
    eigenspaces are what the relative index counts.  eig_tol buckets
    eigenvalues by proximity; the default 0.5 assigns every eigenvalue to the
    nearest of {−1, 0, +1}, which is the right notion for truncated pairs,
    while a strict tolerance like 1e−6 is appropriate for exact
    finite-dimensional tests.
    """
    _check_same_dim(P.matrix, Q.matrix)
    evals = np.linalg.eigvalsh(P.matrix - Q.matrix)
    near_plus = np.abs(evals - 1.0) <= eig_tol
    near_minus = np.abs(evals + 1.0) <= eig_tol
    both = near_plus & near_minus
    if np.any(both):
        raise ValueError(
            f"eig_tol {eig_tol} buckets {int(both.sum())} eigenvalue(s) as both +1 and -1"
        )
    value = int(near_plus.sum()) - int(near_minus.sum())
    return IndexReport(value=value, method="spectral-count", trace_power=0, residual=0.0)


def _trace_of_power(M: np.ndarray, M2: np.ndarray, n: int) -> complex:
    """Tr M^(2n+1) given M and M² without forming the odd power explicitly."""
    if n == 0:
        return complex(np.trace(M))
    X = M2
    for _ in range(n - 1):
        X = X @ M2
    # Tr(X @ M) without the final product
    return complex(np.sum(X * M.T))


def index_by_odd_trace(P: HermitianProjection, Q: HermitianProjection,
                       n: int = 1) -> IndexReport:
    """Tr (P − Q)^(2n+1), equal to the relative index when the difference
    is trace class of order 2n+1.

    In finite dimension the value is exactly rank P − rank Q for every n.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    _check_same_dim(P.matrix, Q.matrix)
    M = P.matrix - Q.matrix
    M2 = M @ M if n >= 1 else None
    t = _trace_of_power(M, M2, n)
    value = float(t.real)
    return IndexReport(
        value=value,
        method="odd-trace",
        trace_power=n,
        residual=abs(value - round(value)),
        imag_part=abs(t.imag),
    )


def odd_trace_stability(P: HermitianProjection, Q: HermitianProjection,
                        n_max: int) -> list:
    """Tr (P − Q)^(2n+1) for n = 0..n_max, as (n, value) pairs.

    Successive entries agree exactly in finite dimension; for truncated pairs
    the spread measures how far the truncation is from the trace-class
    regime.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    _check_same_dim(P.matrix, Q.matrix)
    M = P.matrix - Q.matrix
    M2 = M @ M
    out = [(0, float(np.trace(M).real))]
    X = M2
    out.append((1, float(np.sum(X * M.T).real)))
    for n in range(2, n_max + 1):
        X = X @ M2
        out.append((n, float(np.sum(X * M.T).real)))
    return out


def _conjugate_by(U: np.ndarray, P: np.ndarray, adjoint_on_right: bool) -> np.ndarray:
    """U P U† (or U† P U), using broadcasting when U is diagonal."""
    offdiag = U - np.diag(np.diagonal(U))
    if not np.any(offdiag):
        d = np.diagonal(U)
        if adjoint_on_right:
            return (d[:, None] * P) * d.conj()[None, :]
        return (d.conj()[:, None] * P) * d[None, :]
    if adjoint_on_right:
        return U @ P @ U.conj().T
    return U.conj().T @ P @ U


def index_by_fedosov(P: HermitianProjection, U: UnitaryMatrix, n: int = 1) -> IndexReport:
    """Fedosov trace difference for the compression of U to the range of P.

    Returns Tr (P − P U P U* P)^(n+1) − Tr (P − P U* P U P)^(n+1).  For a pair
    of exact projections (P, UPU*) this equals the relative index, which is
    zero in finite dimension.  Unlike the odd trace, the formula is sensitive
    to non-idempotency of a truncated P: the compression picks up an O(1)
    boundary contribution that does not vanish with the truncation radius, so
    its value on truncated pairs is reported raw, never rounded silently.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    _check_same_dim(P.matrix, U.matrix)
    p = P.matrix
    upu = _conjugate_by(U.matrix, p, adjoint_on_right=True)
    X = p - p @ upu @ p
    upu = _conjugate_by(U.matrix, p, adjoint_on_right=False)
    Y = p - p @ upu @ p
    k = n + 1
    tx = _power_trace(X, k)
    ty = _power_trace(Y, k)
    t = tx - ty
    value = float(t.real)
    return IndexReport(
        value=value,
        method="fedosov",
        trace_power=n,
        residual=abs(value - round(value)),
        imag_part=abs(t.imag),
    )


def _power_trace(A: np.ndarray, k: int) -> complex:
    """Tr A^k for k ≥ 1 without forming the final power."""
    if k == 1:
        return complex(np.trace(A))
    X = A
    for _ in range(k - 2):
        X = X @ A
    return complex(np.sum(X * A.T))


def additivity_check(P: HermitianProjection, Q: HermitianProjection,
                     R: HermitianProjection) -> tuple:
    """Index(P,R) against Index(P,Q) + Index(Q,R) by spectral counting."""
    _check_same_dim(P.matrix, Q.matrix, R.matrix)
    lhs = index_by_spectral_count(P, R).value
    rhs = index_by_spectral_count(P, Q).value + index_by_spectral_count(Q, R).value
    return int(lhs), int(rhs)


def random_projection(rng: np.random.Generator, dim: int, rank: int) -> HermitianProjection:
    """Rank-k projection onto the span of k columns of a Haar unitary."""
    if not 0 <= rank <= dim:
        raise ValueError(f"rank {rank} outside [0, {dim}]")
    if rank == 0:
        return HermitianProjection(np.zeros((dim, dim), dtype=complex))
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, _ = np.linalg.qr(g)
    v = q[:, :rank]
    p = v @ v.conj().T
    p = 0.5 * (p + p.conj().T)
    return HermitianProjection(p, idempotency_tol=1e-10)


def random_unitary(rng: np.random.Generator, dim: int) -> UnitaryMatrix:
    """Haar-distributed unitary via QR with phase-fixed diagonal."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))[None, :]
    return UnitaryMatrix(q, unitarity_tol=1e-10)
