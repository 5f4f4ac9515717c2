"""Critical times of the disentanglement dynamics: closed forms and detection.

An event is a zero crossing of an eigenvalue of the partially transposed
state. Each crossing is a slope discontinuity of ``Lambda(t)``. A crossing in
which a negative eigenvalue disappears is a *loss*, and one in which a negative
eigenvalue appears is an *onset*. The last loss is a sudden death when no
negative eigenvalue remains afterwards. Otherwise the trailing behaviour is
reported as one asymptotic event per eigenvalue that stays negative.

For the symmetric-rate families every eigenvalue of the partial transpose
lives in one of a few small invariant blocks, whose signs reduce to
low-degree polynomials in ``y = 1 - exp(-Gamma t)``:

* ``{|12>,|21>}``: ``gamma (2 gamma y - beta)``                  (label ``t1``)
* ``{|01>,|10>}``: ``beta^2 y + 2 gamma^2 y^3 - alpha beta - 2 beta gamma y^2``  (``t2``)
* ``(|02>-|20>)``: ``gamma (gamma y^2 - alpha)``                  (``t3``)
* ``{(|02>+|20>), |11>}``: determinant, quadratic in ``s = y^2``   (``sym``)

The mixed and subspace families are the same structure with their own
populations and coherences.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from qutrit_esd.dynamics import DecayRates, MAX_STEP_RATE, evolve, propagate
from qutrit_esd.errors import DomainError, ResolutionError
from qutrit_esd.linalg import hermitian_eigenvalues
from qutrit_esd.measures import follow_tracks, partial_transpose
from qutrit_esd.states import (
    MixedParams,
    PureParams,
    SubspaceParams,
    make_mixed_initial,
    make_pure_initial,
    make_subspace_initial,
)

SLOPE_CHANGE = "slope-change"
SUDDEN_DEATH = "sudden-death"
ASYMPTOTIC = "asymptotic"
LOSS = "loss"
ONSET = "onset"

EIG_TOL = 1e-12
TIME_TOL = 1e-6
ROOT_EPS = 1e-12
FAMILIES = ("mixed", "pure", "subspace")


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    source: str
    direction: str | None = None
    label: str | None = None
    slope_jump: float | None = None


@dataclass(frozen=True)
class CriticalTimes:
    events: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        finite = [e.time for e in self.events if e.kind != ASYMPTOTIC]
        if any(b < a for a, b in zip(finite, finite[1:])):
            raise ValueError("event times must be increasing")
        if sum(e.kind == SUDDEN_DEATH for e in self.events) > 1:
            raise ValueError("at most one sudden-death event is allowed")
        if any((e.kind == ASYMPTOTIC) != math.isinf(e.time) for e in self.events):
            raise ValueError("exactly the asymptotic events carry an infinite time")

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    @property
    def finite(self):
        return [e for e in self.events if e.kind != ASYMPTOTIC]

    @property
    def times(self):
        return [e.time for e in self.events]

    @property
    def kinks(self):
        return sum(e.kind == SLOPE_CHANGE for e in self.events)

    @property
    def has_esd(self):
        return any(e.kind == SUDDEN_DEATH for e in self.events)

    @property
    def esd_time(self):
        return next((e.time for e in self.events if e.kind == SUDDEN_DEATH), None)


def _assemble(crossings, negative_at_end, source, meta=None, trailing_labels=None):
    """Turn sign crossings ``(time, direction, label, slope_jump)`` into events."""
    crossings = sorted(crossings, key=lambda c: c[0])
    events = []
    for i, (t, direction, label, jump) in enumerate(crossings):
        last = i == len(crossings) - 1
        kind = SUDDEN_DEATH if last and negative_at_end == 0 and direction == LOSS else SLOPE_CHANGE
        events.append(Event(t, kind, source, direction, label, jump))
    labels = list(trailing_labels or []) + [None] * negative_at_end
    events += [Event(math.inf, ASYMPTOTIC, source, label=labels[i]) for i in range(negative_at_end)]
    return CriticalTimes(tuple(events), dict(meta or {}))


def _time_of(y, rate):
    return -math.log1p(-y) / rate


def _linear_block(label, s0, root):
    """Block whose sign starts at ``s0`` and flips once at ``root`` (which may lie beyond 1)."""
    if s0 == 0:
        return label, ([], 0)
    if root is not None and 0.0 < root < 1.0 - ROOT_EPS:
        return label, ([(root, LOSS if s0 < 0 else ONSET)], -s0)
    return label, ([], s0)


def _quadratic_block(label, a, b, c):
    """Sign changes of ``a s^2 + b s + c`` for ``s = y^2`` in (0, 1)."""
    coeffs = (a, b, c)
    if all(abs(x) == 0.0 for x in coeffs):
        return label, ([], 0)
    s0 = next(np.sign(x) for x in (c, b, a) if x != 0.0)
    roots = []
    if a != 0.0:
        disc = b * b - 4.0 * a * c
        if disc > 0.0:
            sq = math.sqrt(disc)
            # numerically stable pair
            q = -0.5 * (b + math.copysign(sq, b))
            roots = sorted(r for r in (q / a, c / q if q != 0 else math.nan) if not math.isnan(r))
    elif b != 0.0:
        roots = [-c / b]
    out, sign = [], int(s0)
    for s in roots:
        if 0.0 < s < 1.0 - ROOT_EPS:
            out.append((math.sqrt(s), LOSS if sign < 0 else ONSET))
            sign = -sign
    return label, (out, sign)


def _finish(blocks, rate, meta=None):
    crossings, trailing = [], []
    for label, (events, end_sign) in blocks:
        crossings += [(_time_of(y, rate), d, label, None) for y, d in events]
        if end_sign < 0:
            trailing.append(label)
    return _assemble(crossings, len(trailing), "analytic", meta, trailing)


def mixed_family_times(lam, rate=1.0):
    """Critical times of the modified maximally entangled family.

    Returns slope changes at ``ln(2/(2-lam))`` and ``ln(1/(1-lam))`` followed
    by sudden death at ``ln(1/(1-sqrt(lam)))``, all divided by ``rate``. At
    ``lam = 1`` the last two are replaced by asymptotic sentinels.
    """
    if not (0.0 < lam <= 1.0):
        raise DomainError(f"lambda must lie in (0, 1] for critical times, got {lam}")
    blocks = [
        _linear_block("t1", -1, lam / 2.0),
        _linear_block("t2", -1, lam),
        _linear_block("t3", -1, math.sqrt(lam)),
    ]
    return _finish(blocks, rate, {"family": "mixed", "lambda": lam})


def subspace_family_times(chi, rate=1.0):
    """Critical times of ``(|11><11| + |22><22| + chi(|11><22| + h.c.))/2``.

    A single sudden death at ``-ln(1 - chi/2)`` for ``chi <= 1/2``. Beyond
    that, a second negative eigenvalue present from ``t = 0+`` in the
    ``{|02>+|20>, |11>}`` block vanishes at ``y = sqrt(chi^2 - 1/4)``.
    """
    if not (0.0 <= chi <= 1.0):
        raise DomainError(f"chi must lie in [0, 1], got {chi}")
    if chi == 0.0:
        return CriticalTimes((), {"family": "subspace", "chi": chi})
    blocks = [
        _linear_block("t1", -1, chi / 2.0),
        _quadratic_block("sym", 0.0, 1.0, 0.25 - chi * chi),
    ]
    return _finish(blocks, rate, {"family": "subspace", "chi": chi})


def cardano_discriminant(x):
    """``1 - 10x + 27x^2``, positive for every real ``x``."""
    return 1.0 - 10.0 * x + 27.0 * x * x


def cardano_z(x):
    return 5.0 - 27.0 * x + 3.0 * math.sqrt(3.0) * math.sqrt(cardano_discriminant(x))


def _e2_poly(p):
    a, b, g = p.as_tuple()
    # coefficients of y^3, y^2, y, 1
    return (2.0 * g * g, -2.0 * b * g, b * b, -a * b)


def _e2_root(p):
    """Unique real root in ``y`` of the ``{|01>,|10>}`` block, polished by Newton."""
    a, b, g = p.as_tuple()
    if g == 0.0:
        return a / b
    x = a * g / b**2
    z = cardano_z(x)
    u = (1.0 + (2.0 * z) ** (-1.0 / 3.0) - (z / 4.0) ** (1.0 / 3.0)) / 3.0
    y = b / g * u
    c3, c2, c1, c0 = _e2_poly(p)
    for _ in range(3):
        f = ((c3 * y + c2) * y + c1) * y + c0
        df = (3.0 * c3 * y + 2.0 * c2) * y + c1
        y -= f / df
    return y


def pure_family_times(p, rate=1.0):
    """Critical times of ``alpha|00> + beta|11> + gamma|22>`` under equal rates."""
    a, b, g = p.as_tuple()
    blocks = [
        _linear_block("t1", -1 if b > 0 and g > 0 else 0, b / (2.0 * g) if g > 0 else None),
        _linear_block("t2", -1 if a > 0 and b > 0 else 0, _e2_root(p) if a > 0 and b > 0 else None),
        _linear_block("t3", -1 if a > 0 and g > 0 else 0, math.sqrt(a / g) if g > 0 else None),
    ]
    if g > 0:
        blocks.append(_quadratic_block("sym", 4.0 * g**4, g * g * (4.0 * a * g - 3.0 * b * b), a * g * b * b))
    regime = classify_regime(p)
    return _finish(blocks, rate, {"family": "pure", "params": p.as_tuple(), "regime": regime.label})


def pure_times_as_printed(p, rate=1.0):
    """The three pure-state closed forms evaluated literally, for comparison.

    Returns ``(t1, t2, t3)`` with ``inf`` wherever the logarithm's argument
    leaves ``(0, 1)``. These disagree with the dynamics for ``t2`` and ``t3``;
    :func:`pure_family_times` is the authoritative version.
    """
    a, b, g = p.as_tuple()
    if b <= 0 or g <= 0:
        raise DomainError("printed closed forms need beta > 0 and gamma > 0")
    x = a * g / b**2
    z = cardano_z(x)

    def t(arg):
        return -math.log(arg) / rate if 0.0 < arg < 1.0 else math.inf

    t1 = t(1.0 - b / (2.0 * g))
    t2 = t(1.0 - b / (3.0 * g) * (1.0 + (2.0 * z) ** (-1.0 / 3.0) - (z / 2.0) ** (1.0 / 3.0)))
    t3 = t(1.0 - a / g)
    return t1, t2, t3


@dataclass(frozen=True)
class RegimeLabel:
    label: str
    expected_kinks: int
    has_esd: bool
    tie: bool = False
    note: str | None = None


_REGIME_SHAPE = {"a": (0, False), "b": (1, False), "c": (2, False), "d": (2, True)}


def _regime(label, tie=False, note=None):
    kinks, esd = _REGIME_SHAPE[label]
    return RegimeLabel(label, kinks, esd, tie, note)


def classify_regime(p):
    """Place an amplitude triple in one of the four tabulated regimes.

    Strict orderings follow the table directly. Exact ties go to the first
    regime, in table order, whose relaxed (non-strict) pattern admits them;
    the fully degenerate ``alpha = beta = gamma`` goes to (b). Ties are
    flagged ``tie=True``. The ordering ``gamma > alpha > beta`` is absent
    from the table; it is labelled (d), whose event structure it shares,
    and flagged with a note.
    """
    a, b, g = p.as_tuple()
    if a >= b > g:
        return _regime("a")
    if b >= a >= g or a > g > b:
        return _regime("b")
    if b > g > a:
        return _regime("c")
    if g > b > a:
        return _regime("d")
    if a == b == g:
        return _regime("b", tie=True)
    relaxed = {
        "a": a >= b >= g,
        "b": (b >= a >= g) or (a >= g >= b),
        "c": b >= g >= a,
        "d": g >= b >= a,
    }
    for label in "abcd":
        if relaxed[label]:
            return _regime(label, tie=True)
    return _regime("d", note="ordering gamma > alpha > beta is not tabulated")


# --------------------------------------------------------------------------- #
# detection from evolution traces
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class _Crossing:
    track: int
    lo: int
    hi: int
    direction: str
    coarse_time: float
    slope_jump: float


def _signs(values, tol):
    return np.where(values < -tol, -1, np.where(values > tol, 1, 0))


def _check_resolution(times, tracks, tol):
    """Flag tracks that look like they crossed zero twice between two samples."""
    if len(times) < 4:
        return
    v = tracks
    dt = np.diff(times)[:, None]
    s = _signs(v, tol)
    k = np.arange(1, len(times) - 2)
    fwd = v[k] + (v[k] - v[k - 1]) / dt[k - 1] * dt[k]
    bwd = v[k + 1] - (v[k + 2] - v[k + 1]) / dt[k + 1] * dt[k]
    same = (s[k] == s[k + 1]) & (s[k] != 0)
    flipped = (np.sign(fwd) == -s[k]) & (np.sign(bwd) == -s[k])
    deep = (np.abs(fwd) > np.maximum(np.abs(v[k]), tol)) & (np.abs(bwd) > np.maximum(np.abs(v[k + 1]), tol))
    bad = same & flipped & deep
    if bad.any():
        row, col = np.argwhere(bad)[0]
        t = times[k[row]]
        raise ResolutionError(
            f"eigenvalue track {col} may cross zero twice near t={t:.6g}; "
            "sample the evolution more finely"
        )


def find_crossings(times, pt_eigs, tol=EIG_TOL):
    """Zero crossings of the sorted partial-transpose spectra.

    ``pt_eigs`` has one ascending spectrum per row. Returns the crossings and
    the number of eigenvalues whose last definite sign is negative.
    """
    times = np.asarray(times, dtype=float)
    eigs = np.asarray(pt_eigs, dtype=float)
    _check_resolution(times, follow_tracks(eigs), tol)
    signs = _signs(eigs, tol)
    crossings, negative_at_end = [], 0
    for i in range(eigs.shape[1]):
        last_sign, last_idx = 0, None
        for k in range(len(times)):
            s = signs[k, i]
            if s == 0:
                continue
            if last_sign != 0 and s != last_sign:
                v0, v1 = eigs[last_idx, i], eigs[k, i]
                t0, t1 = times[last_idx], times[k]
                tc = t0 - v0 * (t1 - t0) / (v1 - v0)
                jump = 2.0 * abs(v1 - v0) / (t1 - t0)
                crossings.append(_Crossing(i, last_idx, k, LOSS if last_sign < 0 else ONSET, tc, jump))
            last_sign, last_idx = s, k
        negative_at_end += last_sign < 0
    return crossings, negative_at_end


def events_from_tracks(times, pt_eigs, tol=EIG_TOL):
    """Events located by linear interpolation between samples (no re-evolution)."""
    crossings, negative = find_crossings(times, pt_eigs, tol)
    items = [(c.coarse_time, c.direction, None, c.slope_jump) for c in crossings]
    return _assemble(items, negative, "detected")


def pt_spectra(states):
    return np.array([hermitian_eigenvalues(partial_transpose(r)) for r in states])


def _refine(trace, c, time_tol):
    base = trace.states[c.lo]
    lo, hi = float(trace.times[c.lo]), float(trace.times[c.hi])
    t_lo = lo
    old = -1 if c.direction == LOSS else 1
    while hi - lo > time_tol:
        mid = 0.5 * (lo + hi)
        rho = propagate(base, trace.rates, mid - t_lo, trace.step)
        value = hermitian_eigenvalues(partial_transpose(rho))[c.track]
        if np.sign(value) == old:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def detect_events(trace, tol=EIG_TOL, time_tol=TIME_TOL):
    """Locate the abrupt changes of an evolution trace.

    Crossings are bracketed from the stored samples and refined by bisection
    on states re-integrated from the preceding sample, down to
    ``time_tol / max(Gamma)``.
    """
    times = np.asarray(trace.times)
    limit = MAX_STEP_RATE / trace.rates.max
    if len(times) > 1 and np.max(np.diff(times)) > limit * (1 + 1e-9):
        raise ResolutionError(
            f"sampling interval {np.max(np.diff(times)):.3g} exceeds 1e-2/max(gamma) = {limit:.3g}"
        )
    eigs = pt_spectra(trace.states)
    crossings, negative = find_crossings(times, eigs, tol)
    resolved_tol = time_tol / trace.rates.max
    items = [(_refine(trace, c, resolved_tol), c.direction, None, c.slope_jump) for c in crossings]
    result = _assemble(items, negative, "detected", {"t_end": float(times[-1])})
    if result.has_esd:
        after = times >= result.esd_time
        excess = np.sum(np.abs(eigs[after]), axis=1) - np.sum(eigs[after], axis=1)
        result.meta["max_excess_after_esd"] = float(np.max(excess, initial=0.0))
    return result


# --------------------------------------------------------------------------- #
# families and scans
# --------------------------------------------------------------------------- #


def coerce_params(family, params):
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}")
    if family == "mixed":
        return params if isinstance(params, MixedParams) else MixedParams(float(params))
    if family == "subspace":
        return params if isinstance(params, SubspaceParams) else SubspaceParams(float(params))
    return params if isinstance(params, PureParams) else PureParams(*params)


def initial_state(family, params):
    p = coerce_params(family, params)
    return {"mixed": make_mixed_initial, "pure": make_pure_initial, "subspace": make_subspace_initial}[family](p)


def family_times(family, params, rate=1.0):
    p = coerce_params(family, params)
    if family == "mixed":
        return mixed_family_times(p.lam, rate)
    if family == "subspace":
        return subspace_family_times(p.chi, rate)
    return pure_family_times(p, rate)


@dataclass(frozen=True)
class ScanRow:
    params: object
    analytic: CriticalTimes | None
    detected: CriticalTimes | None
    regime: RegimeLabel | None = None


def default_horizon(analytic, rate):
    """Long enough to see every finite analytic event, and at least ``5/rate``."""
    finite = [e.time for e in analytic.finite] if analytic is not None else []
    return max([5.0 / rate] + [1.25 * t + 1.0 / rate for t in finite])


def scan_point(family, params, rate=1.0, t_end=None, step=None, sample_every=10, detect=True):
    p = coerce_params(family, params)
    try:
        analytic = family_times(family, p, rate)
    except DomainError:
        analytic = None
    detected = None
    if detect:
        horizon = default_horizon(analytic, rate) if t_end is None else t_end
        trace = evolve(initial_state(family, p), DecayRates.symmetric(rate), horizon, step, sample_every)
        detected = detect_events(trace)
    regime = classify_regime(p) if family == "pure" else None
    return ScanRow(p, analytic, detected, regime)


def _scan_job(args):
    return scan_point(*args)


def scan_family(family, grid, rate=1.0, t_end=None, step=None, sample_every=10, detect=True, workers=1):
    """Analytic and detected critical times over a parameter grid, in grid order."""
    jobs = [(family, g, rate, t_end, step, sample_every, detect) for g in grid]
    if workers <= 1 or len(jobs) <= 1:
        return [_scan_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_job, jobs))
