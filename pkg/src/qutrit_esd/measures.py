"""Partial transpose, realignment, the Lambda measure and the EOF lower bound."""

from dataclasses import dataclass
from functools import lru_cache
import math
from typing import NamedTuple

import numpy as np

from qutrit_esd.errors import DomainError
from qutrit_esd.linalg import hermitian_eigenvalues, trace_norm
from qutrit_esd.states import DIM, DIM2, outer


def _blocks(rho):
    return np.asarray(rho, dtype=np.complex128).reshape(DIM, DIM, DIM, DIM)


def partial_transpose(rho):
    """Transpose on subsystem A: ``PT[(a1,b1),(a2,b2)] = rho[(a2,b1),(a1,b2)]``."""
    return _blocks(rho).transpose(2, 1, 0, 3).reshape(DIM2, DIM2)


def realign(rho):
    """Realigned matrix: ``R[(a1,a2),(b1,b2)] = rho[(a1,b1),(a2,b2)]``."""
    return _blocks(rho).transpose(0, 2, 1, 3).reshape(DIM2, DIM2)


class LambdaMeasure(NamedTuple):
    Lambda: float
    pt_norm: float
    realign_norm: float


def lambda_measure(rho):
    pt_norm = trace_norm(partial_transpose(rho))
    realign_norm = trace_norm(realign(rho))
    return LambdaMeasure(max(pt_norm, realign_norm), pt_norm, realign_norm)


def binary_entropy(x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def eof_gamma(Lambda, m):
    return (math.sqrt(Lambda) + math.sqrt((m - 1) * max(m - Lambda, 0.0))) ** 2 / m**2


def eof_lower_bound(Lambda, m=3):
    """Lower bound on the entanglement of formation of an ``m x n`` state (``m <= n``).

    ``Lambda`` below 1 is treated as separable (bound 0); values above ``m``
    are unphysical and rejected. For ``m = 2`` only the entropy branch exists.
    """
    if m < 2 or int(m) != m:
        raise DomainError(f"m must be an integer >= 2, got {m}")
    if Lambda > m + 1e-9:
        raise DomainError(f"Lambda = {Lambda} exceeds the dimension bound {m}")
    Lambda = min(Lambda, float(m))
    if Lambda <= 1.0:
        return 0.0
    knee = 4.0 * (m - 1) / m
    if m == 2 or Lambda <= knee:
        g = eof_gamma(Lambda, m)
        return binary_entropy(g) + (1.0 - g) * math.log2(m - 1)
    return math.log2(m - 1) / (m - 2) * (Lambda - m) + math.log2(m)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues_pt: np.ndarray
    eigenvalues_M: np.ndarray


def m_eigentrack(rho, tol=1e-9):
    """Spectra of the partial transpose and of ``M = PT PT^dagger``.

    Both spectra are computed independently and cross-checked; an
    inconsistency beyond ``tol`` raises ``ArithmeticError``.
    """
    pt = partial_transpose(rho)
    eig_pt = hermitian_eigenvalues(pt)
    eig_m = hermitian_eigenvalues(pt @ pt.conj().T)
    if np.max(np.abs(np.sort(eig_pt**2) - eig_m)) > tol:
        raise ArithmeticError("M spectrum is not the square of the partial-transpose spectrum")
    total = float(np.sum(np.sqrt(np.clip(eig_m, 0.0, None))))
    if abs(total - float(np.sum(np.abs(eig_pt)))) > tol:
        raise ArithmeticError("sum of sqrt(eig M) disagrees with the partial-transpose norm")
    return SpectrumReport(eig_pt, eig_m)


def analytic_E(elements):
    """The three M eigenvalues that vanish at the mixed-family critical times."""
    e = elements
    return (
        (e.p12_12 - e.c11_22) ** 2,
        (e.c00_11 - e.p01_01) ** 2,
        (e.c00_22 - e.p02_02) ** 2,
    )


@dataclass(frozen=True)
class WitnessSet:
    W1: np.ndarray
    W2: np.ndarray
    W3: np.ndarray

    def __iter__(self):
        return iter((self.W1, self.W2, self.W3))


def _witness(cross, swap):
    """``(1/2)[|s><s| + |s'><s'| - |u><v| - |v><u|]`` for populations ``swap`` and coherence ``cross``."""
    (a, b), (c, d) = cross
    (p, q), (r, s) = swap
    w = outer(p, q, p, q) + outer(r, s, r, s) - outer(a, b, c, d) - outer(c, d, a, b)
    return 0.5 * w


@lru_cache(maxsize=None)
def witnesses():
    ws = WitnessSet(
        _witness(((1, 1), (2, 2)), ((2, 1), (1, 2))),
        _witness(((0, 0), (1, 1)), ((1, 0), (0, 1))),
        _witness(((0, 0), (2, 2)), ((0, 2), (2, 0))),
    )
    for w in ws:
        w.setflags(write=False)
    return ws


def witness_expectations(rho):
    rho = np.asarray(rho)
    return tuple(float(np.trace(w @ rho).real) for w in witnesses())


def match_tracks(previous, current):
    """Reorder ``current`` so that entry ``i`` continues the track ``previous[i]``.

    Greedy nearest-neighbour assignment by smallest ``|delta|``; ties go to
    the lower previous index, then the lower current index.
    """
    previous = np.asarray(previous, dtype=float)
    current = np.asarray(current, dtype=float)
    n = len(previous)
    cost = np.abs(previous[:, None] - current[None, :]).ravel()
    order = np.argsort(cost, kind="stable")
    out = np.empty(n)
    used_prev = np.zeros(n, bool)
    used_cur = np.zeros(n, bool)
    left = n
    for flat in order:
        i, j = divmod(int(flat), n)
        if used_prev[i] or used_cur[j]:
            continue
        out[i] = current[j]
        used_prev[i] = used_cur[j] = True
        left -= 1
        if left == 0:
            break
    return out


def follow_tracks(spectra):
    """Continuity-matched tracks from a sequence of sorted spectra."""
    spectra = np.asarray(spectra, dtype=float)
    if len(spectra) == 0:
        return spectra
    tracks = np.empty_like(spectra)
    tracks[0] = np.sort(spectra[0])
    for k in range(1, len(spectra)):
        tracks[k] = match_tracks(tracks[k - 1], spectra[k])
    return tracks
