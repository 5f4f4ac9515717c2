"""Two-qutrit basis conventions and the three initial-state families.

States are plain ``(9, 9)`` complex numpy arrays. The composite index of
``|a>_A |b>_B`` is ``3 * a + b`` (subsystem A major), and every index map in
this package is written against that convention. Constructors return
read-only arrays.
"""

from dataclasses import dataclass
import math

import numpy as np

from qutrit_esd.errors import DomainError
from qutrit_esd.linalg import hermitian_eigenvalues

DIM = 3
DIM2 = DIM * DIM

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-10


def index(a, b):
    """Composite row/column index of the product basis vector ``|a b>``."""
    return DIM * a + b


def ket(a, b):
    v = np.zeros(DIM2, dtype=np.complex128)
    v[index(a, b)] = 1.0
    return v


def outer(a1, b1, a2, b2):
    """The operator ``|a1 b1><a2 b2|``."""
    m = np.zeros((DIM2, DIM2), dtype=np.complex128)
    m[index(a1, b1), index(a2, b2)] = 1.0
    return m


def _frozen(m):
    m = np.array(m, dtype=np.complex128)
    m.setflags(write=False)
    return m


@dataclass(frozen=True)
class MixedParams:
    """Coherence parameter of the modified maximally entangled family."""

    lam: float

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0) or math.isnan(self.lam):
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")


@dataclass(frozen=True)
class PureParams:
    """Real nonnegative amplitudes of ``alpha|00> + beta|11> + gamma|22>``."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        amps = (self.alpha, self.beta, self.gamma)
        if any(not (x >= 0.0) for x in amps):
            raise DomainError(f"amplitudes must be real and nonnegative, got {amps}")
        norm2 = sum(x * x for x in amps)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise DomainError(f"amplitudes are not normalized (sum of squares {norm2!r})")

    @classmethod
    def normalized(cls, alpha, beta, gamma):
        """Rescale arbitrary nonnegative amplitudes to unit norm."""
        n = math.sqrt(alpha * alpha + beta * beta + gamma * gamma)
        if n == 0.0:
            raise DomainError("amplitudes are all zero")
        return cls(alpha / n, beta / n, gamma / n)

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma)


@dataclass(frozen=True)
class SubspaceParams:
    """Coherence parameter of the state confined to span{|11>, |22>}."""

    chi: float

    def __post_init__(self):
        if not (0.0 <= self.chi <= 1.0) or math.isnan(self.chi):
            raise DomainError(f"chi must lie in [0, 1], got {self.chi}")


def make_mixed_initial(p):
    """``(1/3)`` times ones on the diagonal and ``lambda`` between |00>, |11>, |22>."""
    rho = np.zeros((DIM2, DIM2), dtype=np.complex128)
    diag = [index(k, k) for k in range(DIM)]
    for r in diag:
        for c in diag:
            rho[r, c] = 1.0 if r == c else p.lam
    return _frozen(rho / 3.0)


def make_pure_initial(p):
    psi = p.alpha * ket(0, 0) + p.beta * ket(1, 1) + p.gamma * ket(2, 2)
    return _frozen(np.outer(psi, psi.conj()))


def make_subspace_initial(p):
    rho = np.zeros((DIM2, DIM2), dtype=np.complex128)
    i11, i22 = index(1, 1), index(2, 2)
    rho[i11, i11] = rho[i22, i22] = 0.5
    rho[i11, i22] = rho[i22, i11] = 0.5 * p.chi
    return _frozen(rho)


def product_state(rho_a, rho_b):
    return _frozen(np.kron(rho_a, rho_b))


def vacuum():
    return _frozen(outer(0, 0, 0, 0))


@dataclass(frozen=True)
class Diagnostics:
    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    passed: bool


def validate(rho, hermitian_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, psd_tol=PSD_TOL):
    """Report how far ``rho`` is from being a density matrix.

    Never raises for a square matrix; callers decide what to do with a failed
    report. Tolerances default to the strict construction-time values.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = float(abs(np.trace(rho) - 1.0))
    sym = (rho + rho.conj().T) / 2
    min_eig = float(hermitian_eigenvalues(sym)[0])
    passed = herm <= hermitian_tol and tr <= trace_tol and min_eig >= -psd_tol
    return Diagnostics(herm, tr, min_eig, passed)


def random_density_matrix(rng, dim=DIM2, rank=None):
    """Ginibre-distributed density matrix, for tests and property checks."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_product_state(rng):
    return product_state(random_density_matrix(rng, DIM), random_density_matrix(rng, DIM))
