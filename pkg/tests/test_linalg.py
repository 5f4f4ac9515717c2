import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import svd_trace_norm
from qutrit_esd.errors import DomainError
from qutrit_esd.linalg import hermitian_eigenvalues, trace_norm
from qutrit_esd.measures import partial_transpose
from qutrit_esd.states import MixedParams, make_mixed_initial


def test_simple_spectra():
    assert np.allclose(hermitian_eigenvalues(np.eye(9) / 9), np.full(9, 1 / 9))
    d = np.zeros((9, 9))
    d[8, 8] = 1
    assert np.allclose(hermitian_eigenvalues(d), [0] * 8 + [1])


def test_pt_of_maximally_entangled_spectrum():
    ev = hermitian_eigenvalues(partial_transpose(make_mixed_initial(MixedParams(1.0))))
    assert np.allclose(ev, [-1 / 3] * 3 + [1 / 3] * 6, atol=1e-12)
    assert ev.sum() == pytest.approx(1.0)
    assert np.abs(ev).sum() == pytest.approx(3.0)


def test_non_hermitian_rejected():
    a = np.zeros((3, 3))
    a[0, 1] = 1.0
    with pytest.raises(DomainError):
        hermitian_eigenvalues(a)
    with pytest.raises(DomainError):
        hermitian_eigenvalues(np.zeros((2, 3)))


def _hermitian(re, im):
    a = re + 1j * im
    return a + a.conj().T


floats = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (9, 9), elements=floats), arrays(float, (9, 9), elements=floats))
def test_eigenvalues_match_lapack(re, im):
    a = _hermitian(re, im)
    ours = hermitian_eigenvalues(a)
    ref = np.linalg.eigvalsh(a)
    scale = max(1.0, np.max(np.abs(ref)))
    assert np.max(np.abs(ours - ref)) <= 1e-10 * scale
    assert ours.sum() == pytest.approx(np.trace(a).real, abs=1e-10 * scale)
    assert (ours**2).sum() == pytest.approx(np.trace(a @ a).real, rel=1e-10, abs=1e-10)


def test_degenerate_spectrum(rng):
    q, _ = np.linalg.qr(rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9)))
    d = np.array([1, 1, 1, 2, 2, 0, 0, 0, 0], dtype=float)
    a = q @ np.diag(d) @ q.conj().T
    assert np.allclose(hermitian_eigenvalues(a), np.sort(d), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (9, 9), elements=floats), arrays(float, (9, 9), elements=floats))
def test_trace_norm_matches_svd(re, im):
    a = re + 1j * im
    ref = svd_trace_norm(a)
    # singular values come from sqrt(eig(A A^dagger)), so a zero singular
    # value is only resolved to about sqrt(eps) * the largest one
    sigma_max = np.linalg.norm(a, 2)
    assert abs(trace_norm(a) - ref) <= 1e-9 * max(ref, 1.0) + 9 * 1e-7 * sigma_max
    assert trace_norm(a) >= abs(np.trace(a)) - 1e-9


def test_trace_norm_full_rank_accuracy(rng):
    for _ in range(20):
        a = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
        assert trace_norm(a) == pytest.approx(svd_trace_norm(a), rel=1e-10)


def test_trace_norm_examples(rng):
    assert trace_norm(np.zeros((9, 9))) == 0.0
    g = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    assert trace_norm(rho) == pytest.approx(1.0, abs=1e-12)
    assert trace_norm(partial_transpose(make_mixed_initial(MixedParams(1.0)))) == pytest.approx(3.0, abs=1e-12)
