"""Command-line front end: evolution series, critical-time reports, scans, figure data.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure,
4 I/O error.
"""

import argparse
import csv
from dataclasses import dataclass
import io
import json
import math
import os
from pathlib import Path
import sys

import numpy as np

from qutrit_esd import critical
from qutrit_esd.dynamics import DecayRates, analytic_elements, evolve
from qutrit_esd.errors import ConfigurationError, DomainError, IntegrationError, ResolutionError
from qutrit_esd.measures import (
    analytic_E,
    eof_lower_bound,
    follow_tracks,
    lambda_measure,
    m_eigentrack,
    witness_expectations,
)
from qutrit_esd.states import MixedParams, PureParams, SubspaceParams

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

DEFAULTS = {
    "family": None,
    "lambda": None,
    "alpha": None,
    "beta": None,
    "gamma": None,
    "chi": None,
    "normalize": False,
    "gamma1": 1.0,
    "gamma2": 1.0,
    "t_end": 5.0,
    "step": 1e-3,
    "sample_every": 10,
    "out": None,
}

EVOLVE_COLUMNS = (
    ["t", "Lambda", "pt_norm", "realign_norm", "eof_bound"]
    + [f"E{i}" for i in range(1, 10)]
    + [f"pt_eig{i}" for i in range(1, 10)]
    + ["w1", "w2", "w3"]
)

FIG5_LAMBDA, FIG5_CHI = 0.15, 0.2
FIG6_DASHED = (0.2386, 0.9545, 0.1790)
FIG6_SOLID = (0.1790, 0.2386, 0.9545)


def fmt(x):
    """12 significant digits, ``inf``/``nan`` spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def json_time(t):
    return "inf" if math.isinf(t) else t


@dataclass(frozen=True)
class RunConfig:
    family: str
    params: object
    rates: DecayRates
    t_end: float
    step: float
    sample_every: int
    out: str | None = None

    @property
    def time_scale(self):
        return self.rates.gamma1 if self.rates.is_symmetric else 1.0

    @property
    def time_comment(self):
        if self.rates.is_symmetric:
            return f"# time column: Gamma*t with Gamma = {fmt(self.rates.gamma1)}"
        return f"# time column: t (gamma1 = {fmt(self.rates.gamma1)}, gamma2 = {fmt(self.rates.gamma2)})"

    def describe(self):
        return f"# family={self.family} params={param_string(self.family, self.params)}"


def param_dict(family, p):
    if family == "mixed":
        return {"lambda": p.lam}
    if family == "subspace":
        return {"chi": p.chi}
    return {"alpha": p.alpha, "beta": p.beta, "gamma": p.gamma}


def param_string(family, p):
    return " ".join(f"{k}={fmt(v)}" for k, v in param_dict(family, p).items())


def _family_params(values):
    family = values["family"]
    if family is None:
        raise ConfigurationError("--family is required (mixed, pure or subspace)")
    if family not in critical.FAMILIES:
        raise ConfigurationError(f"unknown family {family!r}")
    need = {"mixed": ["lambda"], "subspace": ["chi"], "pure": ["alpha", "beta", "gamma"]}[family]
    missing = [k for k in need if values.get(k) is None]
    if missing:
        raise ConfigurationError(f"family {family} needs --{' --'.join(missing)}")
    if family == "mixed":
        return MixedParams(float(values["lambda"]))
    if family == "subspace":
        return SubspaceParams(float(values["chi"]))
    amps = [float(values[k]) for k in need]
    return PureParams.normalized(*amps) if values.get("normalize") else PureParams(*amps)


def build_config(values):
    """Validate merged settings into a :class:`RunConfig`."""
    params = _family_params(values)
    rates = DecayRates(float(values["gamma1"]), float(values["gamma2"]))
    t_end, step = float(values["t_end"]), float(values["step"])
    sample_every = values["sample_every"]
    if not t_end > 0:
        raise ConfigurationError(f"--t-end must be > 0, got {t_end}")
    if not step > 0 or step > 1e-2 / rates.max * (1 + 1e-12):
        raise ConfigurationError(f"--step must lie in (0, 1e-2/max(gamma)] = (0, {1e-2 / rates.max:g}], got {step}")
    if int(sample_every) != float(sample_every) or int(sample_every) < 1:
        raise ConfigurationError(f"--sample-every must be an integer >= 1, got {sample_every}")
    if step * int(sample_every) > 1e-2 / rates.max * (1 + 1e-9):
        raise ConfigurationError(
            f"sampling interval step*sample_every = {step * int(sample_every):g} exceeds 1e-2/max(gamma)"
        )
    return RunConfig(values["family"], params, rates, t_end, step, int(sample_every), values.get("out"))


# --------------------------------------------------------------------------- #
# data series
# --------------------------------------------------------------------------- #


def evolution_rows(trace, time_scale=1.0, eof_m=3):
    """One row of :data:`EVOLVE_COLUMNS` values per sample."""
    spectra = [m_eigentrack(rho) for rho in trace.states]
    m_tracks = follow_tracks([s.eigenvalues_M for s in spectra])
    rows = []
    for k, (t, rho) in enumerate(zip(trace.times, trace.states)):
        lam, pt_n, re_n = lambda_measure(rho)
        row = [t * time_scale, lam, pt_n, re_n, eof_lower_bound(min(lam, eof_m), eof_m)]
        row += list(m_tracks[k]) + list(spectra[k].eigenvalues_pt) + list(witness_expectations(rho))
        rows.append(row)
    return rows


def write_csv(path, header, rows, comments=()):
    buf = io.StringIO()
    for line in comments:
        buf.write(line.rstrip("\n") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    data = buf.getvalue().encode("utf-8")
    if path is None or path == "-":
        sys.stdout.write(data.decode("utf-8"))
    else:
        Path(path).write_bytes(data)
    return data


def read_csv(path):
    """Parse a CSV written by this tool into ``(header, float array)``; ``#`` lines skipped."""
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader])
    return header, data


def event_comment(e, scale):
    return f"# event: t={fmt(e.time * scale)} kind={e.kind} direction={e.direction}"


def run_evolve(config):
    rho0 = critical.initial_state(config.family, config.params)
    trace = evolve(rho0, config.rates, config.t_end, config.step, config.sample_every)
    events = critical.detect_events(trace)
    comments = [config.describe(), config.time_comment]
    comments += [event_comment(e, config.time_scale) for e in events if e.kind != critical.ASYMPTOTIC]
    rows = evolution_rows(trace, config.time_scale)
    return write_csv(config.out, EVOLVE_COLUMNS, rows, comments), events


def _event_json(e, scale):
    out = {"time": json_time(e.time * scale), "kind": e.kind}
    if e.direction is not None:
        out["direction"] = e.direction
    if e.label is not None:
        out["label"] = e.label
    return out


def _discrepancies(analytic, detected, scale):
    pool = [e.time for e in detected.finite]
    out = []
    for e in analytic.finite:
        if not pool:
            break
        j = int(np.argmin([abs(t - e.time) for t in pool]))
        t_det = pool.pop(j)
        out.append({"analytic": e.time * scale, "detected": t_det * scale, "abs": abs(t_det - e.time) * scale})
    return out


def times_report(config, detect=True):
    report = {"family": config.family, "params": param_dict(config.family, config.params)}
    report["time_unit"] = "gamma*t" if config.rates.is_symmetric else "t"
    scale = config.time_scale
    if config.family == "pure":
        report["regime"] = critical.classify_regime(config.params).label
    analytic = None
    if config.rates.is_symmetric:
        try:
            analytic = critical.family_times(config.family, config.params, config.rates.gamma1)
        except DomainError:
            analytic = None
    report["analytic"] = [_event_json(e, scale) for e in analytic] if analytic is not None else []
    detected = None
    if detect:
        rho0 = critical.initial_state(config.family, config.params)
        trace = evolve(rho0, config.rates, config.t_end, config.step, config.sample_every)
        detected = critical.detect_events(trace)
    report["detected"] = [_event_json(e, scale) for e in detected] if detected is not None else []
    report["discrepancies"] = (
        _discrepancies(analytic, detected, scale) if analytic is not None and detected is not None else []
    )
    return report


def parse_grid(family, spec):
    """``start:stop:num`` for mixed/subspace, a simplex resolution ``N`` for pure."""
    if family == "pure":
        try:
            n = int(spec)
        except ValueError:
            raise ConfigurationError(f"pure grid is an integer simplex resolution, got {spec!r}") from None
        if n < 1:
            raise ConfigurationError("pure grid resolution must be >= 1")
        pts = []
        for i in range(n + 1):
            for j in range(n + 1 - i):
                w = np.array([i, j, n - i - j], dtype=float) / n
                pts.append(PureParams.normalized(*np.sqrt(w)))
        if len(pts) < 2:
            raise ConfigurationError("grid must have at least 2 points")
        return pts
    try:
        start, stop, num = spec.split(":")
        values = np.linspace(float(start), float(stop), int(num))
    except ValueError:
        raise ConfigurationError(f"grid must look like start:stop:num, got {spec!r}") from None
    if len(values) < 2:
        raise ConfigurationError("grid must have at least 2 points")
    return [float(v) for v in values]


def _labelled(ct, label):
    if ct is None:
        return math.nan
    for e in ct:
        if e.label == label:
            return e.time
    return math.nan


def _nearest(ct, t):
    if ct is None or math.isnan(t):
        return math.nan
    if math.isinf(t):
        return math.inf if any(e.kind == critical.ASYMPTOTIC for e in ct) else math.nan
    finite = [e.time for e in ct.finite]
    return min(finite, key=lambda s: abs(s - t)) if finite else math.nan


def scan_rows(family, rows, scale):
    names = {"mixed": ["lambda"], "subspace": ["chi"], "pure": ["alpha", "beta", "gamma"]}[family]
    header = names + ["t1", "t2", "t3", "det_t1", "det_t2", "det_t3"]
    header += ["analytic_kinks", "analytic_esd", "detected_kinks", "detected_esd"]
    if family == "pure":
        header += ["regime", "regime_kinks", "regime_esd", "regime_tie"]
    out = []
    for r in rows:
        vals = list(param_dict(family, r.params).values())
        ts = [_labelled(r.analytic, lab) for lab in ("t1", "t2", "t3")]
        row = vals + [t * scale for t in ts] + [_nearest(r.detected, t) * scale for t in ts]
        for ct in (r.analytic, r.detected):
            row += [str(ct.kinks), str(int(ct.has_esd))] if ct is not None else ["nan", "nan"]
        if family == "pure":
            g = r.regime
            row += [g.label, str(g.expected_kinks), str(int(g.has_esd)), str(int(g.tie))]
        out.append(row)
    return header, out


def run_scan(family, grid_spec, rate, t_end=None, step=None, sample_every=10, detect=True, workers=None, out=None):
    grid = parse_grid(family, grid_spec)
    if workers is None:
        workers = os.cpu_count() or 1
    rows = critical.scan_family(family, grid, rate, t_end, step, sample_every, detect, workers)
    header, table = scan_rows(family, rows, rate)
    comments = [f"# scan family={family} grid={grid_spec}", f"# time columns: Gamma*t with Gamma = {fmt(rate)}"]
    return write_csv(out, header, table, comments)


# --------------------------------------------------------------------------- #
# figures
# --------------------------------------------------------------------------- #

FIGURES = (1, 2, 3, 4, 5, 6)


def _trace(family, params, t_end, sample_every=2):
    return evolve(critical.initial_state(family, params), DecayRates(), t_end, 1e-3, sample_every)


def figure_series(which):
    """``(header, rows, comments)`` for one of the six figures, axes in Gamma*t."""
    if which in (1, 2, 4):
        lam = 0.1
        trace = _trace("mixed", MixedParams(lam), 1.0)
        rows = evolution_rows(trace)
        base = [f"# mixed family lambda={lam}", "# time column: Gamma*t"]
        col = {name: i for i, name in enumerate(EVOLVE_COLUMNS)}
        if which == 1:
            return ["t", "Lambda"], [[r[0], r[col["Lambda"]]] for r in rows], base
        if which == 2:
            header = ["t"] + [f"E{i}" for i in range(1, 10)] + ["E1_closed", "E2_closed", "E3_closed"]
            out = []
            for r in rows:
                closed = analytic_E(analytic_elements(lam, 1.0, r[0]))
                out.append([r[0]] + r[col["E1"]:col["E9"] + 1] + list(closed))
            return header, out, base
        header = ["t"] + [f"pt_eig{i}" for i in range(1, 10)] + ["w1", "w2", "w3"]
        return header, [[r[0]] + r[col["pt_eig1"]:] for r in rows], base
    if which == 3:
        header = ["lambda", "t1", "t2", "t3"]
        rows = []
        for lam in np.linspace(0.01, 0.99, 99):
            ct = critical.mixed_family_times(float(lam))
            rows.append([lam] + [_labelled(ct, f"t{i}") for i in (1, 2, 3)])
        return header, rows, ["# closed-form critical times of the mixed family, Gamma*t"]
    if which == 5:
        mixed = _trace("mixed", MixedParams(FIG5_LAMBDA), 1.5)
        sub = _trace("subspace", SubspaceParams(FIG5_CHI), 1.5)
        rows = [
            [t, lambda_measure(a).Lambda, lambda_measure(b).Lambda]
            for t, a, b in zip(mixed.times, mixed.states, sub.states)
        ]
        comments = [f"# mixed lambda={FIG5_LAMBDA}; subspace chi={FIG5_CHI}", "# time column: Gamma*t"]
        return ["t", "Lambda_mixed", "Lambda_subspace"], rows, comments
    if which == 6:
        dashed = PureParams.normalized(*FIG6_DASHED)
        solid = PureParams.normalized(*FIG6_SOLID)
        a = _trace("pure", dashed, 3.0)
        b = _trace("pure", solid, 3.0)
        rows = [
            [t, lambda_measure(x).Lambda, lambda_measure(y).Lambda] for t, x, y in zip(a.times, a.states, b.states)
        ]
        comments = [
            f"# dashed: amplitudes {FIG6_DASHED} normalized to {param_string('pure', dashed)}",
            f"# solid: amplitudes {FIG6_SOLID} normalized to {param_string('pure', solid)}",
            "# time column: Gamma*t",
        ]
        return ["t", "Lambda_dashed", "Lambda_solid"], rows, comments
    raise ConfigurationError(f"unknown figure {which}; choose from {FIGURES}")


def run_figures(which, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for n in which:
        header, rows, comments = figure_series(n)
        path = out_dir / f"fig{n}.csv"
        write_csv(path, header, rows, comments)
        written.append(path)
    return written


# --------------------------------------------------------------------------- #
# argument handling
# --------------------------------------------------------------------------- #


def _add_run_options(p):
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--family", choices=critical.FAMILIES)
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--chi", type=float)
    p.add_argument("--normalize", action="store_true", default=None, help="rescale pure amplitudes to unit norm")
    p.add_argument("--gamma1", type=float)
    p.add_argument("--gamma2", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--sample-every", dest="sample_every", type=int)
    p.add_argument("--out")


def build_parser():
    parser = argparse.ArgumentParser(prog="qutrit-esd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_options(sub.add_parser("evolve", help="write the evolution series as CSV"))
    times = sub.add_parser("times", help="analytic and detected critical times as JSON")
    _add_run_options(times)
    scan = sub.add_parser("scan", help="critical times over a parameter grid as CSV")
    _add_run_options(scan)
    scan.add_argument("--grid", required=True, help="start:stop:num, or N (simplex resolution) for pure")
    scan.add_argument("--workers", type=int)
    scan.add_argument("--no-detect", action="store_true", help="closed forms only")
    fig = sub.add_parser("figures", help="data series for the figures")
    fig.add_argument("--figure", default="all", help="1..6 or 'all'")
    fig.add_argument("--out", default=".", help="output directory")
    return parser


def merged_values(args):
    values = dict(DEFAULTS)
    explicit = set()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(k.replace("-", "_") for k in loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        loaded = {k.replace("-", "_"): v for k, v in loaded.items()}
        values.update(loaded)
        explicit.update(loaded)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
            explicit.add(key)
    values["_explicit"] = explicit
    return values


def _figure_list(spec):
    if spec == "all":
        return list(FIGURES)
    try:
        n = int(spec)
    except ValueError:
        raise ConfigurationError(f"unknown figure {spec!r}") from None
    if n not in FIGURES:
        raise ConfigurationError(f"unknown figure {n}; choose from 1..6")
    return [n]


def dispatch(args):
    if args.command == "figures":
        run_figures(_figure_list(args.figure), args.out)
        return
    values = merged_values(args)
    if args.command == "scan":
        if values["family"] is None:
            raise ConfigurationError("--family is required")
        rates = DecayRates(float(values["gamma1"]), float(values["gamma2"]))
        if not rates.is_symmetric:
            raise ConfigurationError("scans need gamma1 == gamma2")
        # without an explicit horizon each grid point picks one that covers its events
        t_end = float(values["t_end"]) if "t_end" in values["_explicit"] else None
        run_scan(
            values["family"], args.grid, rates.gamma1, t_end, float(values["step"]),
            int(values["sample_every"]), not args.no_detect, args.workers, values["out"],
        )
        return
    config = build_config(values)
    if args.command == "evolve":
        run_evolve(config)
    else:
        text = json.dumps(times_report(config), indent=2) + "\n"
        if config.out in (None, "-"):
            sys.stdout.write(text)
        else:
            Path(config.out).write_text(text, encoding="utf-8")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        dispatch(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IntegrationError, ResolutionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
