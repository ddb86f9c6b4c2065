import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian
from ctqa import linalg as la
from ctqa.constructions import NOT_PI_2
from oracles import rotation, taylor_expm


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16])
def test_eigh_reconstructs(rng, n):
    h = random_hermitian(rng, n)
    w, v = la.eigh(h)
    assert np.all(np.diff(w) >= 0)
    assert la.unitary_defect(v) < 1e-12
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) < 1e-12
    assert np.max(np.abs(w - np.linalg.eigvalsh(h))) < 1e-12


def test_eigh_degenerate_spectrum():
    w, v = la.eigh(la.identity(4) * 3)
    assert np.allclose(w, 3)
    assert la.unitary_defect(v) < 1e-14
    w, v = la.eigh(la.kron(la.NOT, la.identity(2)))
    assert np.allclose(w, [-1, -1, 1, 1])


def test_eigh_rejects_non_hermitian():
    with pytest.raises(la.NotHermitianError, match="not Hermitian"):
        la.eigh(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("t", [0, 0.3, 1, Fraction(7, 3), 4, 7.5])
def test_rotation_closed_form(t):
    assert np.max(np.abs(la.mat_exp_hermitian(NOT_PI_2, t) - rotation(float(t)))) < 1e-12


def test_identity_at_zero_and_period():
    for t in (0, 4, 8):
        assert np.max(np.abs(la.mat_exp_hermitian(NOT_PI_2, t) - la.identity(2))) < 1e-12


def test_against_taylor(rng):
    for n in (2, 3, 6):
        h = random_hermitian(rng, n)
        for t in (0.1, 1.0, 2.5):
            assert np.max(np.abs(la.mat_exp_hermitian(h, t) - taylor_expm(h, t))) < 1e-10


def test_negative_duration_and_bad_type():
    with pytest.raises(la.LinalgError, match="negative duration"):
        la.mat_exp_hermitian(NOT_PI_2, -1)
    with pytest.raises(TypeError):
        la.mat_exp_hermitian(NOT_PI_2, "1")
    with pytest.raises(la.LinalgError):
        la.mat_exp_hermitian(NOT_PI_2, math.inf)


def test_shape_checks():
    with pytest.raises(la.LinalgError):
        la.as_matrix(np.zeros((2, 3)))
    with pytest.raises(la.LinalgError):
        la.apply(la.identity(2), np.zeros(3))
    with pytest.raises(la.LinalgError, match="not unitary"):
        la.apply(2 * la.identity(2), np.array([1, 0]))


def test_kron_direct_sum_projector():
    k = la.kron(la.NOT, la.identity(2))
    assert k.shape == (4, 4) and k[0, 2] == 1
    d = la.direct_sum(la.NOT, la.identity(1))
    assert d.shape == (3, 3) and d[2, 2] == 1 and d[0, 1] == 1
    p = la.projector(3, [0, 2])
    assert la.expectation(p, np.array([0.6, 0.8j, 0])) == pytest.approx(0.36)
    with pytest.raises(la.LinalgError):
        la.projector(2, [2])


def test_frozen_is_read_only():
    f = la.frozen(la.identity(2))
    with pytest.raises(ValueError):
        f[0, 0] = 5


hermitian_entries = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**31 - 1), st.floats(0, 10))
def test_exp_is_unitary_and_composes(n, seed, t):
    h = random_hermitian(np.random.default_rng(seed), n)
    u = la.mat_exp_hermitian(h, t)
    assert la.unitary_defect(u) < 1e-11
    half = la.mat_exp_hermitian(h, t / 2)
    assert np.max(np.abs(half @ half - u)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.lists(hermitian_entries, min_size=3, max_size=3))
def test_two_by_two_real_symmetric(vals):
    a, b, c = vals
    h = np.array([[a, b], [b, c]])
    w, _ = la.eigh(h)
    assert np.max(np.abs(w - np.linalg.eigvalsh(h))) < 1e-12
