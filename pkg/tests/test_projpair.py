"""Finite-dimensional identities of the relative index."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxlab import projpair
from fluxlab.projpair import (HermitianProjection, UnitaryMatrix,
                              additivity_check, index_by_fedosov,
                              index_by_odd_trace, index_by_spectral_count,
                              odd_trace_stability, random_projection,
                              random_unitary)


def diag_projection(bits) -> HermitianProjection:
    return HermitianProjection(np.diag(np.asarray(bits, dtype=float)))


def test_rank_difference_on_diagonal_pair():
    P = diag_projection([1, 1, 1, 0, 0])
    Q = diag_projection([1, 0, 0, 1, 0])
    rep = index_by_spectral_count(P, Q)
    assert rep.value == 1
    assert rep.method == "spectral-count"
    assert rep.residual == 0.0


def test_rank_difference_random():
    rng = np.random.default_rng(1)
    for _ in range(20):
        dim = int(rng.integers(2, 40))
        rp, rq = int(rng.integers(0, dim + 1)), int(rng.integers(0, dim + 1))
        P = random_projection(rng, dim, rp)
        Q = random_projection(rng, dim, rq)
        assert index_by_spectral_count(P, Q).value == rp - rq


def test_antisymmetry_and_complement():
    rng = np.random.default_rng(2)
    for _ in range(10):
        dim = int(rng.integers(3, 30))
        P = random_projection(rng, dim, int(rng.integers(1, dim)))
        Q = random_projection(rng, dim, int(rng.integers(1, dim)))
        ipq = index_by_spectral_count(P, Q).value
        assert index_by_spectral_count(Q, P).value == -ipq
        Pc = HermitianProjection(np.eye(dim) - P.matrix)
        Qc = HermitianProjection(np.eye(dim) - Q.matrix)
        assert index_by_spectral_count(Pc, Qc).value == -ipq


def test_unitary_conjugation_invariance():
    rng = np.random.default_rng(3)
    dim = 24
    P = random_projection(rng, dim, 9)
    Q = random_projection(rng, dim, 14)
    base = index_by_spectral_count(P, Q).value
    for _ in range(5):
        W = random_unitary(rng, dim).matrix
        Pw = HermitianProjection(W @ P.matrix @ W.conj().T)
        Qw = HermitianProjection(W @ Q.matrix @ W.conj().T)
        assert index_by_spectral_count(Pw, Qw).value == base


def test_odd_trace_matches_spectral_count():
    rng = np.random.default_rng(4)
    for _ in range(10):
        dim = int(rng.integers(2, 40))
        P = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
        Q = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
        want = index_by_spectral_count(P, Q).value
        for n in range(4):
            rep = index_by_odd_trace(P, Q, n=n)
            assert abs(rep.value - want) <= 1e-8
            assert rep.imag_part <= 1e-10


def test_odd_trace_stability_flat_for_exact_projections():
    rng = np.random.default_rng(5)
    P = random_projection(rng, 30, 11)
    Q = random_projection(rng, 30, 17)
    traces = odd_trace_stability(P, Q, n_max=3)
    assert [n for n, _ in traces] == [0, 1, 2, 3]
    vals = [v for _, v in traces]
    assert max(vals) - min(vals) <= 1e-8
    assert abs(vals[0] - (-6)) <= 1e-8


def test_additivity():
    rng = np.random.default_rng(6)
    for _ in range(10):
        dim = int(rng.integers(3, 40))
        P = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
        Q = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
        R = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
        left, right = additivity_check(P, Q, R)
        assert left == right


def test_fedosov_vanishes_for_exact_projections():
    rng = np.random.default_rng(7)
    for dim in (6, 13, 21):
        P = random_projection(rng, dim, dim // 2)
        U = random_unitary(rng, dim)
        for n in (1, 2):
            rep = index_by_fedosov(P, U, n=n)
            assert abs(rep.value) <= 1e-9
            assert rep.method == "fedosov"


def test_index_report_rounding():
    rep = index_by_odd_trace(diag_projection([1, 0]), diag_projection([0, 0]))
    assert rep.rounded() == 1
    assert rep.trace_power == 1


def test_spectral_count_rejects_overlapping_buckets():
    # a zero eigenvalue of P - Q falls in both the +1 and -1 buckets at
    # eig_tol = 1
    P = diag_projection([1, 0])
    Q = diag_projection([1, 0])
    with pytest.raises(ValueError, match="buckets"):
        index_by_spectral_count(P, Q, eig_tol=1.0)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError, match="dimension mismatch"):
        index_by_odd_trace(diag_projection([1, 0]), diag_projection([1, 0, 0]))


def test_projection_validation():
    with pytest.raises(ValueError, match="not Hermitian"):
        HermitianProjection(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match="not idempotent"):
        HermitianProjection(0.5 * np.eye(3))
    with pytest.raises(ValueError, match="square"):
        HermitianProjection(np.zeros((2, 3)))
    loose = HermitianProjection(0.5 * np.eye(3), idempotency_tol=0.5)
    assert loose.idempotency_residual == 0.25


def test_unitary_validation():
    with pytest.raises(ValueError, match="not unitary"):
        UnitaryMatrix(2.0 * np.eye(4))
    U = UnitaryMatrix(np.diag(np.exp(1j * np.arange(4))))
    assert U.dim == 4


def test_random_projection_rank_bounds():
    rng = np.random.default_rng(8)
    with pytest.raises(ValueError, match="outside"):
        random_projection(rng, 4, 5)
    assert random_projection(rng, 4, 0).rank() == 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 16))
def test_property_rank_difference_and_antisymmetry(seed, dim):
    rng = np.random.default_rng(seed)
    rp = int(rng.integers(0, dim + 1))
    rq = int(rng.integers(0, dim + 1))
    P = random_projection(rng, dim, rp)
    Q = random_projection(rng, dim, rq)
    assert index_by_spectral_count(P, Q).value == rp - rq
    assert index_by_spectral_count(Q, P).value == rq - rp


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 16))
def test_property_difference_square_commutes(seed, dim):
    # (P - Q)^2 commutes with both projections; the algebra behind the
    # n-independence of the odd traces
    rng = np.random.default_rng(seed)
    P = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
    Q = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
    D2 = (P.matrix - Q.matrix) @ (P.matrix - Q.matrix)
    for A in (P.matrix, Q.matrix):
        assert np.max(np.abs(D2 @ A - A @ D2)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 12))
def test_property_odd_trace_n_independent(seed, dim):
    rng = np.random.default_rng(seed)
    P = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
    Q = random_projection(rng, dim, int(rng.integers(0, dim + 1)))
    traces = odd_trace_stability(P, Q, n_max=3)
    vals = [v for _, v in traces]
    assert max(vals) - min(vals) <= 1e-8
