import math

import numpy as np
import pytest

from oracles import exact_state, pt_by_loops
from qutrit_esd.critical import (
    ASYMPTOTIC,
    LOSS,
    ONSET,
    SLOPE_CHANGE,
    SUDDEN_DEATH,
    CriticalTimes,
    Event,
    cardano_discriminant,
    cardano_z,
    classify_regime,
    detect_events,
    events_from_tracks,
    mixed_family_times,
    pt_spectra,
    pure_family_times,
    pure_times_as_printed,
    scan_family,
    subspace_family_times,
)
from qutrit_esd.dynamics import DecayRates, analytic_elements, evolve
from qutrit_esd.errors import DomainError, ResolutionError
from qutrit_esd.measures import analytic_E, lambda_measure
from qutrit_esd.states import (
    MixedParams,
    PureParams,
    SubspaceParams,
    make_mixed_initial,
    make_pure_initial,
    make_subspace_initial,
    vacuum,
)

DASHED = PureParams.normalized(0.2386, 0.9545, 0.1790)
SOLID = PureParams.normalized(0.1790, 0.2386, 0.9545)


def brute_force_roots(rho0, t_end, n=4001):
    """Sign changes of exact partial-transpose eigenvalues on a dense grid."""
    ts = np.linspace(0, t_end, n)
    ev = np.array([np.linalg.eigvalsh(pt_by_loops(exact_state(np.array(rho0), t))) for t in ts])
    count = 0
    for i in range(9):
        s = np.sign(np.where(np.abs(ev[:, i]) < 1e-12, 0, ev[:, i]))
        s = s[s != 0]
        count += int(np.sum(s[1:] != s[:-1]))
    return count


def test_critical_times_invariants():
    with pytest.raises(ValueError):
        CriticalTimes((Event(0.2, SLOPE_CHANGE, "analytic"), Event(0.1, SLOPE_CHANGE, "analytic")))
    with pytest.raises(ValueError):
        CriticalTimes((Event(0.1, SUDDEN_DEATH, "analytic"), Event(0.2, SUDDEN_DEATH, "analytic")))
    with pytest.raises(ValueError):
        CriticalTimes((Event(1.0, ASYMPTOTIC, "analytic"),))


def test_mixed_times_examples():
    ct = mixed_family_times(0.1)
    assert ct.times == pytest.approx([math.log(2 / 1.9), math.log(1 / 0.9), -math.log(1 - math.sqrt(0.1))])
    assert [e.kind for e in ct] == [SLOPE_CHANGE, SLOPE_CHANGE, SUDDEN_DEATH]
    one = mixed_family_times(1.0)
    assert one.times[0] == pytest.approx(math.log(2))
    assert [e.kind for e in one][1:] == [ASYMPTOTIC, ASYMPTOTIC]
    assert max(mixed_family_times(1e-9).times) < 1e-4
    assert mixed_family_times(0.1, rate=2.0).times == pytest.approx([t / 2 for t in ct.times])
    with pytest.raises(DomainError):
        mixed_family_times(0.0)


@pytest.mark.parametrize("lam", np.linspace(0.05, 0.95, 19))
def test_root_identities(lam):
    ct = mixed_family_times(lam)
    for i, t in enumerate(ct.times):
        assert analytic_E(analytic_elements(lam, 1.0, t))[i] <= 1e-12


def test_mixed_ordering_on_grid():
    for lam in np.arange(1, 10) / 10:
        t = mixed_family_times(lam).times
        assert t[0] < t[1] < t[2]


def test_z_discriminant_positive():
    x = np.linspace(-5, 5, 10001)
    assert np.all(cardano_discriminant(x) > 0)
    assert cardano_z(1.0) == pytest.approx(5 - 27 + 3 * math.sqrt(3) * math.sqrt(1 - 10 + 27))


def test_pure_equal_amplitudes_matches_mixed_limit():
    s = 1 / math.sqrt(3)
    pure, mixed = pure_family_times(PureParams(s, s, s)), mixed_family_times(1.0)
    assert [e.kind for e in pure] == [e.kind for e in mixed]
    assert pure.times[0] == pytest.approx(mixed.times[0], abs=1e-12)


def test_printed_pure_forms_disagree_at_equal_amplitudes():
    s = 1 / math.sqrt(3)
    t1, t2, _ = pure_times_as_printed(PureParams(s, s, s))
    assert t1 == pytest.approx(math.log(2))
    # the literal t2 expression is finite here although the state never loses that eigenvalue
    assert math.isfinite(t2)
    assert math.isinf(pure_family_times(PureParams(s, s, s)).events[1].time)


def test_solid_triple_analytic():
    ct = pure_family_times(SOLID)
    assert [e.kind for e in ct] == [SLOPE_CHANGE, SLOPE_CHANGE, SUDDEN_DEATH]
    assert all(0 < t < math.inf for t in ct.times)
    a, b, g = SOLID.as_tuple()
    assert ct.esd_time == pytest.approx(-math.log(1 - math.sqrt(a / g)))
    assert ct.times[0] == pytest.approx(-math.log(1 - b / (2 * g)))


def test_classifier_examples():
    assert classify_regime(DASHED).label == "b"
    assert classify_regime(SOLID).label == "d"
    assert classify_regime(PureParams(1.0, 0.0, 0.0)).label == "a"
    s = 1 / math.sqrt(3)
    assert classify_regime(PureParams(s, s, s)).label == "b"
    tie = classify_regime(PureParams.normalized(0.3, 0.6, 0.6))
    assert tie.tie
    untabulated = classify_regime(PureParams.normalized(0.4, 0.2, 0.9))
    assert untabulated.label == "d" and untabulated.note


def test_classifier_is_total_on_simplex():
    labels = set()
    n = 24
    for i in range(n + 1):
        for j in range(n + 1 - i):
            w = np.array([i, j, n - i - j]) / n
            labels.add(classify_regime(PureParams.normalized(*np.sqrt(w))).label)
    assert labels == {"a", "b", "c", "d"}


def test_subspace_times():
    ct = subspace_family_times(0.2)
    assert len(ct) == 1 and ct.events[0].kind == SUDDEN_DEATH
    assert ct.esd_time == pytest.approx(math.log(2 / 1.8))
    assert subspace_family_times(0.0).events == ()


def test_detection_mixed():
    tr = evolve(make_mixed_initial(MixedParams(0.1)), DecayRates(), 1.0)
    det = detect_events(tr)
    assert det.times == pytest.approx(mixed_family_times(0.1).times, abs=1e-6)
    assert det.has_esd and det.meta["max_excess_after_esd"] <= 1e-9


def test_detection_respects_rate():
    tr = evolve(make_mixed_initial(MixedParams(0.3)), DecayRates.symmetric(2.0), 1.0)
    assert detect_events(tr).times == pytest.approx(mixed_family_times(0.3, rate=2.0).times, abs=1e-6)


def test_detection_vacuum_and_subspace():
    assert len(detect_events(evolve(vacuum(), DecayRates(), 1.0))) == 0
    det = detect_events(evolve(make_subspace_initial(SubspaceParams(0.2)), DecayRates(), 1.0))
    assert [e.kind for e in det] == [SUDDEN_DEATH]


def test_subspace_strong_coherence_events():
    chi = 0.8
    det = detect_events(evolve(make_subspace_initial(SubspaceParams(chi)), DecayRates(), 3.0))
    ana = subspace_family_times(chi)
    assert [e.kind for e in det] == [e.kind for e in ana]
    assert det.times == pytest.approx(ana.times, abs=1e-6)


def test_detected_matches_analytic_for_random_pure(rng):
    for _ in range(12):
        p = PureParams.normalized(*rng.random(3))
        ana = pure_family_times(p)
        horizon = max([5.0] + [1.25 * t + 1 for t in ana.times if math.isfinite(t)])
        det = detect_events(evolve(make_pure_initial(p), DecayRates(), horizon))
        assert [(e.kind, e.direction) for e in det] == [(e.kind, e.direction) for e in ana]
        assert [e.time for e in det.finite] == pytest.approx([e.time for e in ana.finite], abs=1e-6)


def test_onset_in_dashed_triple():
    ct = pure_family_times(DASHED)
    directions = [e.direction for e in ct.finite]
    assert directions == [LOSS, ONSET]
    # independent check on an exact-propagator grid
    assert brute_force_roots(make_pure_initial(DASHED), 3.0, n=601) == 2


def test_events_from_stored_tracks():
    tr = evolve(make_mixed_initial(MixedParams(0.4)), DecayRates(), 2.0)
    coarse = events_from_tracks(tr.times, pt_spectra(tr.states))
    assert coarse.times == pytest.approx(mixed_family_times(0.4).times, abs=1e-4)


def test_coarse_sampling_rejected():
    tr = evolve(make_mixed_initial(MixedParams(0.1)), DecayRates(), 1.0, sample_every=50)
    with pytest.raises(ResolutionError):
        detect_events(tr)


def test_double_crossing_between_samples_rejected():
    times = np.arange(8) * 1e-3
    eig = np.ones((8, 9))
    # a positive track whose neighbours on both sides extrapolate to negative values
    eig[:, 0] = [4, 3, 2, 0.5, 0.5, 2, 3, 4]
    with pytest.raises(ResolutionError):
        events_from_tracks(times, np.sort(eig, axis=1))


def test_esd_characterization():
    tr = evolve(make_mixed_initial(MixedParams(0.3)), DecayRates(), 2.0)
    t_esd = detect_events(tr).esd_time
    for t, rho in zip(tr.times, tr.states):
        lam = lambda_measure(rho).Lambda
        assert (lam > 1) if t < t_esd - 1e-6 else (lam - 1 <= 1e-9)


def test_scan_family_order_and_workers():
    grid = [0.2, 0.4, 0.6]
    serial = scan_family("mixed", grid, detect=False)
    assert [r.params.lam for r in serial] == grid
    parallel = scan_family("mixed", grid, t_end=1.5, workers=2)
    assert [r.params.lam for r in parallel] == grid
    for r in parallel:
        assert r.detected.times == pytest.approx(r.analytic.times, abs=1e-6)


def test_scan_along_regime_a_rays_is_event_free():
    # gamma small enough that the beta-gamma coherence never flips
    rays = [PureParams.normalized(1.0, 0.8, g) for g in (0.0, 0.05, 0.1)]
    rows = scan_family("pure", rays, t_end=6.0)
    for r in rows:
        assert r.regime.label == "a"
        assert r.detected.finite == []
