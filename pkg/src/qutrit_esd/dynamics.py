"""Zero-temperature amplitude damping of two qutrits.

The master equation is integrated with fixed-step classical RK4. Because the
generator is linear and time independent, one RK4 step is a fixed linear map
on the 81 matrix entries; that map is assembled once per (rates, step) by
pushing each matrix unit through :func:`rk4_step` and then applied by a
single matrix-vector product per step.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np

from qutrit_esd.errors import ConfigurationError, DomainError, IntegrationError
from qutrit_esd.linalg import hermitian_eigenvalues
from qutrit_esd.states import DIM, DIM2, MixedParams, make_mixed_initial, validate

MAX_STEP_RATE = 1e-2
DEFAULT_STEP_RATE = 1e-3
POSITIVITY_FAIL = 1e-6


@dataclass(frozen=True)
class DecayRates:
    gamma1: float = 1.0
    gamma2: float = 1.0

    def __post_init__(self):
        if not (self.gamma1 > 0 and self.gamma2 > 0):
            raise DomainError(f"decay rates must be positive, got {self.gamma1}, {self.gamma2}")

    @classmethod
    def symmetric(cls, rate):
        return cls(rate, rate)

    @property
    def max(self):
        return max(self.gamma1, self.gamma2)

    @property
    def is_symmetric(self):
        return self.gamma1 == self.gamma2


def annihilation():
    """Bosonic lowering operator truncated to three levels."""
    c = np.zeros((DIM, DIM), dtype=np.complex128)
    c[0, 1] = 1.0
    c[1, 2] = math.sqrt(2.0)
    return c


@dataclass(frozen=True)
class LindbladOperators:
    c1: np.ndarray
    c2: np.ndarray


@lru_cache(maxsize=None)
def jump_operators():
    c, eye = annihilation(), np.eye(DIM)
    ops = LindbladOperators(np.kron(c, eye), np.kron(eye, c))
    ops.c1.setflags(write=False)
    ops.c2.setflags(write=False)
    return ops


def number_operator():
    n = np.diag([0.0, 1.0, 2.0]).astype(np.complex128)
    eye = np.eye(DIM)
    return np.kron(n, eye) + np.kron(eye, n)


def lindblad_rhs(rho, rates):
    """Right-hand side of the two-reservoir amplitude-damping master equation."""
    ops = jump_operators()
    out = np.zeros((DIM2, DIM2), dtype=np.complex128)
    for g, c in ((rates.gamma1, ops.c1), (rates.gamma2, ops.c2)):
        cd = c.conj().T
        cdc = cd @ c
        out += 0.5 * g * (2.0 * c @ rho @ cd - cdc @ rho - rho @ cdc)
    return out


def rk4_step(f, y, h):
    """One classical fourth-order Runge-Kutta step of the autonomous ODE ``y' = f(y)``."""
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@lru_cache(maxsize=64)
def _rk4_propagator(rates, h):
    rhs = lambda r: lindblad_rhs(r, rates)  # noqa: E731
    prop = np.empty((DIM2 * DIM2, DIM2 * DIM2), dtype=np.complex128)
    unit = np.zeros((DIM2, DIM2), dtype=np.complex128)
    for k in range(DIM2 * DIM2):
        unit.flat[k] = 1.0
        prop[:, k] = rk4_step(rhs, unit, h).ravel()
        unit.flat[k] = 0.0
    prop.setflags(write=False)
    return prop


def _check_step(step, rates):
    limit = MAX_STEP_RATE / rates.max
    if not (step > 0):
        raise ConfigurationError(f"step must be positive, got {step}")
    if step > limit * (1 + 1e-12):
        raise ConfigurationError(f"step {step} exceeds the limit 1e-2/max(gamma) = {limit}")


def propagate(rho, rates, dt, step):
    """Advance ``rho`` by ``dt``: whole RK4 steps of ``step`` plus one shorter remainder step."""
    n_full = int(math.floor(dt / step + 1e-9))
    rest = dt - n_full * step
    v = np.asarray(rho, dtype=np.complex128).ravel()
    if n_full:
        prop = _rk4_propagator(rates, step)
        for _ in range(n_full):
            v = prop @ v
    out = v.reshape(DIM2, DIM2)
    if rest > 1e-12 * step:
        out = rk4_step(lambda r: lindblad_rhs(r, rates), out, rest)
    return out


@dataclass(frozen=True)
class EvolutionTrace:
    times: np.ndarray
    states: np.ndarray
    step: float
    rates: DecayRates = field(default_factory=DecayRates)

    def __len__(self):
        return len(self.times)

    @property
    def scaled_times(self):
        """Times as ``Gamma t`` for symmetric rates, otherwise unchanged."""
        return self.times * self.rates.gamma1 if self.rates.is_symmetric else self.times


def evolve(rho0, rates, t_end, step=None, sample_every=10):
    """Integrate the master equation from ``rho0`` up to ``t_end``.

    The step is shortened slightly if needed so that ``t_end`` is hit exactly.
    Samples are kept every ``sample_every`` steps, always including both
    endpoints. No renormalization is applied.
    """
    step = DEFAULT_STEP_RATE / rates.max if step is None else step
    if not (t_end > 0):
        raise ConfigurationError(f"t_end must be positive, got {t_end}")
    if int(sample_every) != sample_every or sample_every < 1:
        raise ConfigurationError(f"sample_every must be a positive integer, got {sample_every}")
    _check_step(step, rates)

    n_steps = max(1, math.ceil(t_end / step - 1e-9))
    h = t_end / n_steps
    prop = _rk4_propagator(rates, h)

    v = np.asarray(rho0, dtype=np.complex128).ravel().copy()
    times, states = [0.0], [v.copy()]
    for k in range(1, n_steps + 1):
        v = prop @ v
        if k % sample_every == 0 or k == n_steps:
            times.append(k * h)
            states.append(v.copy())

    states = np.array(states).reshape(-1, DIM2, DIM2)
    for t, rho in zip(times, states):
        lowest = hermitian_eigenvalues((rho + rho.conj().T) / 2)[0]
        if lowest < -POSITIVITY_FAIL:
            raise IntegrationError(f"state lost positivity at t={t:.6g} (eigenvalue {lowest:.3e})")
    states.setflags(write=False)
    return EvolutionTrace(np.array(times), states, h, rates)


def trace_diagnostics(trace):
    """Validation report of every sample at the relaxed integration tolerances."""
    return [validate(r, hermitian_tol=1e-8, trace_tol=1e-8, psd_tol=1e-8) for r in trace.states]


@dataclass(frozen=True)
class AnalyticElements:
    """Six matrix elements of the evolved mixed family; ``pAB_CD`` are populations, ``cAB_CD`` coherences."""

    p12_12: float
    c11_22: float
    c00_11: float
    p01_01: float
    c00_22: float
    p02_02: float

    def as_array(self):
        return np.array([self.p12_12, self.c11_22, self.c00_11, self.p01_01, self.c00_22, self.p02_02])


# (row, column) of each AnalyticElements field in the 9x9 matrix
ELEMENT_POSITIONS = {
    "p12_12": (5, 5),
    "c11_22": (4, 8),
    "c00_11": (0, 4),
    "p01_01": (1, 1),
    "c00_22": (0, 8),
    "p02_02": (2, 2),
}


def analytic_elements(lam, rate, t):
    """Closed-form elements of the mixed family under equal decay rates."""
    e1, e2, e3, e4 = (math.exp(-k * rate * t) for k in (1, 2, 3, 4))
    return AnalyticElements(
        p12_12=(2.0 / 3.0) * (e3 - e4),
        c11_22=(lam / 3.0) * e3,
        c00_11=(2.0 * lam / 3.0) * e3 - (4.0 * lam / 3.0) * e2 + lam * e1,
        p01_01=2.0 * e3 - (7.0 / 3.0) * e2 - (2.0 / 3.0) * e4 + e1,
        c00_22=(lam / 3.0) * e2,
        p02_02=-(2.0 / 3.0) * e3 + (1.0 / 3.0) * e4 + (1.0 / 3.0) * e2,
    )


def numeric_elements(rho):
    """Read the same six elements off a 9x9 state (real parts)."""
    return AnalyticElements(**{k: float(rho[r, c].real) for k, (r, c) in ELEMENT_POSITIONS.items()})


def oracle_compare(lam, rate, t_end, step, sample_every=10):
    """Largest deviation between RK4 and the closed-form elements over all samples."""
    rates = DecayRates.symmetric(rate)
    trace = evolve(make_mixed_initial(MixedParams(lam)), rates, t_end, step, sample_every)
    worst = 0.0
    for t, rho in zip(trace.times, trace.states):
        num = numeric_elements(rho).as_array()
        ref = analytic_elements(lam, rate, t).as_array()
        worst = max(worst, float(np.max(np.abs(num - ref))))
    return worst
