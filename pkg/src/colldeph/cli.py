"""Command-line front end: configured sweeps, random ensembles and one-shot queries.

Exit status is 0 on success, 1 for usage or configuration problems and 2 when
a numerical routine fails (SDP breakdown, rejected certificate).
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import os
import re
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import bell, gme, states
from .channel import DephasingChannel, FieldOrientation, SpectralModel, STANDARD_CAUCHY
from .errors import (
    CertificateInvalid,
    ColldephError,
    ConfigParseError,
    NumericalFailure,
)

log = logging.getLogger("colldeph.cli")

CSV_HEADER = "scenario,t,alpha,nx,ny,nz,E,S,S_setting,status"
QUANTITIES = ("negativity", "svetlichny", "asymptotic-negativity")
SETTING_MODES = ("auto", "ghz", "w", "optimize")
ORIENTATION_WARN_TOL = 1e-6
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

_SCENARIO_KEYS = {"state", "state_file", "qubits", "alpha", "orientation", "spectral", "center",
                  "width", "t", "quantities", "setting", "reoptimize"}
_ENSEMBLE_KEYS = {"qubits", "count", "alpha", "orientation", "spectral", "center", "width", "seed", "t"}
_RUN_KEYS = {"output", "workers"}


def fmt(x: float | None) -> str:
    """12 significant digits; empty for missing values, ``inf`` for infinite ones."""
    if x is None:
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x + 0.0:.12g}"


# ---------------------------------------------------------------- config model


@dataclass(frozen=True)
class Scenario:
    name: str
    num_qubits: int
    state: str | None
    state_file: str | None
    alphas: tuple[float, ...]
    orientation: FieldOrientation
    spectral: SpectralModel
    times: tuple[float, ...]
    quantities: tuple[str, ...]
    setting: str = "auto"
    reoptimize: bool = False

    @property
    def sweep_axis(self) -> str:
        return "alpha" if len(self.alphas) > 1 else "t"

    def grid(self) -> list[tuple[float, float]]:
        return [(t, a) for a in self.alphas for t in self.times]


@dataclass(frozen=True)
class EnsembleSpec:
    name: str
    num_qubits: int
    count: int
    alpha: float
    orientation: FieldOrientation
    spectral: SpectralModel
    seed: int
    times: tuple[float, ...]

    def label(self, index: int) -> str:
        width = len(str(self.count - 1))
        return f"{self.name}/{index:0{width}d}"


@dataclass
class RunConfig:
    source: str
    output: Path
    workers: int = 1
    scenarios: list[Scenario] = field(default_factory=list)
    ensembles: list[EnsembleSpec] = field(default_factory=list)


class _Locator:
    """Maps (section, key) to a 1-based line number of the config text."""

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], int] = {}
        current = None
        for i, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            m = re.match(r"^\[(.+)\]$", line)
            if m:
                current = m.group(1).strip()
                self.sections[current] = i
                continue
            m = re.match(r"^([^=:;#\s][^=:]*?)\s*[=:]", line)
            if m and current is not None:
                self.keys.setdefault((current, m.group(1).strip().lower()), i)

    def line(self, section: str, key: str | None = None) -> int | None:
        if key is not None and (section, key) in self.keys:
            return self.keys[(section, key)]
        return self.sections.get(section)


def parse_values(text: str, what: str = "value") -> tuple[float, ...]:
    """Comma-separated items, each a number, ``inf``, or an inclusive ``start:stop:step`` range."""
    out: list[float] = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if ":" in item:
            parts = item.split(":")
            if len(parts) != 3:
                raise ValueError(f"range {item!r} must be start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if not step > 0:
                raise ValueError(f"range {item!r} needs a positive step")
            if stop < start:
                raise ValueError(f"range {item!r} is empty")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            out.extend(float(f"{start + i * step:.12g}") for i in range(count))
        else:
            out.append(float(item))
    if not out:
        raise ValueError(f"no {what} given")
    if any(math.isnan(v) for v in out):
        raise ValueError(f"{what} may not be NaN")
    return tuple(out)


def parse_orientation(values) -> FieldOrientation:
    comps = [float(v) for v in (values.replace(",", " ").split() if isinstance(values, str) else values)]
    if len(comps) != 3:
        raise ValueError(f"orientation needs three numbers, got {len(comps)}")
    norm = math.sqrt(sum(c * c for c in comps))
    if abs(norm - 1.0) > ORIENTATION_WARN_TOL:
        log.warning("orientation %s has norm %.9g; normalizing", tuple(comps), norm)
    return FieldOrientation(comps)


def _spectral(kind: str, center: float, width: float) -> SpectralModel:
    kind = kind.strip().lower()
    if kind in ("standard-cauchy", "cauchy", "standard"):
        if center != 0.0 or width != 1.0:
            return SpectralModel.lorentzian(center, width)
        return STANDARD_CAUCHY
    if kind in ("lorentzian", "shifted-lorentzian"):
        return SpectralModel.lorentzian(center, width)
    raise ValueError(f"unknown spectral model {kind!r}")


def _truthy(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"expected yes/no, got {text!r}")


def parse_config(text: str, source: str = "<config>", base_dir: Path | None = None) -> RunConfig:
    """Parse INI-style run configuration text; see the README for the format."""
    loc = _Locator(text)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParseError(str(exc).splitlines()[0], line=getattr(exc, "lineno", None)) from None

    def fail(section, key, message):
        raise ConfigParseError(f"[{section}] {message}", field=key, line=loc.line(section, key))

    def get(section, key, convert, default=None, required=False):
        sec = cp[section]
        if key not in sec:
            if required:
                fail(section, key, f"missing required key {key!r}")
            return default
        raw = sec[key]
        try:
            return convert(raw)
        except (ValueError, ColldephError) as exc:
            fail(section, key, f"bad value {raw!r}: {exc}")

    def check_keys(section, allowed):
        for key in cp[section]:
            if key not in allowed:
                fail(section, key, f"unknown key {key!r}")

    default_output = Path(Path(source).stem + ".csv")
    output, workers = default_output, 1
    if cp.has_section("run"):
        check_keys("run", _RUN_KEYS)
        output = Path(get("run", "output", str, str(default_output)))
        workers = get("run", "workers", int, 1)
        if workers < 1:
            fail("run", "workers", "workers must be at least 1")
    cfg = RunConfig(source=source, output=output, workers=workers)
    names: set[str] = set()

    for section in cp.sections():
        kind, _, name = section.partition(" ")
        name = name.strip()
        if kind == "run":
            continue
        if kind not in ("scenario", "ensemble"):
            fail(section, None, f"unknown section type {kind!r}; use [scenario NAME] or [ensemble NAME]")
        if not name or "," in name or "/" in name or '"' in name:
            fail(section, None, "section needs a name without commas, slashes or quotes")
        if name in names:
            fail(section, None, f"duplicate name {name!r}")
        names.add(name)
        orientation = get(section, "orientation", parse_orientation, required=True)
        spectral = _spectral(get(section, "spectral", str, "standard-cauchy"),
                             get(section, "center", float, 0.0), get(section, "width", float, 1.0))

        if kind == "ensemble":
            check_keys(section, _ENSEMBLE_KEYS)
            qubits = get(section, "qubits", int, required=True)
            if qubits not in states.SUPPORTED_QUBITS:
                fail(section, "qubits", f"qubits must be one of {states.SUPPORTED_QUBITS}")
            count = get(section, "count", int, required=True)
            if count < 1:
                fail(section, "count", "count must be at least 1")
            alpha = get(section, "alpha", float, 1.0)
            if not 0 <= alpha <= 1:
                fail(section, "alpha", "alpha must lie in [0, 1]")
            seed = get(section, "seed", int, required=True)
            if not 0 <= seed < 2**64:
                fail(section, "seed", "seed must be a 64-bit unsigned integer")
            times = get(section, "t", lambda s: parse_values(s, "time"), required=True)
            if any(t < 0 for t in times):
                fail(section, "t", "times must be nonnegative")
            cfg.ensembles.append(EnsembleSpec(name, qubits, count, alpha, orientation, spectral, seed, times))
            continue

        check_keys(section, _SCENARIO_KEYS)
        state = get(section, "state", lambda s: s.strip().lower())
        state_file = get(section, "state_file", str)
        if (state is None) == (state_file is None):
            fail(section, "state", "give exactly one of 'state' or 'state_file'")
        if state is not None and state not in states.NAMED_STATES:
            fail(section, "state", f"unknown state {state!r}; known: {sorted(states.NAMED_STATES)}")
        if state_file is not None:
            p = Path(state_file)
            if not p.is_absolute() and base_dir is not None:
                p = base_dir / p
            if not p.exists():
                fail(section, "state_file", f"state file {state_file!r} not found")
            state_file = str(p)
        qubits = get(section, "qubits", int, required=state is not None)
        if qubits is None:
            qubits = get(section, "state_file", lambda s: states.num_qubits_of(states.read_matrix(state_file)))
        if qubits not in states.SUPPORTED_QUBITS:
            fail(section, "qubits", f"qubits must be one of {states.SUPPORTED_QUBITS}")
        if state is not None and qubits not in states.NAMED_STATES[state][1]:
            fail(section, "qubits", f"state {state!r} does not exist on {qubits} qubits")
        alphas = get(section, "alpha", lambda s: parse_values(s, "alpha"), (1.0,))
        if any(not 0 <= a <= 1 for a in alphas):
            fail(section, "alpha", "alpha values must lie in [0, 1]")
        quantities = get(section, "quantities",
                         lambda s: tuple(q.strip().lower() for q in s.split(",") if q.strip()),
                         required=True)
        if not quantities:
            fail(section, "quantities", "quantities list is empty")
        for q in quantities:
            if q not in QUANTITIES:
                fail(section, "quantities", f"unknown quantity {q!r}; choose from {QUANTITIES}")
        if "negativity" in quantities and "asymptotic-negativity" in quantities:
            fail(section, "quantities", "negativity and asymptotic-negativity need separate scenarios")
        if "svetlichny" in quantities and qubits not in bell.SUPPORTED_PARTIES:
            fail(section, "quantities", f"svetlichny needs {bell.SUPPORTED_PARTIES} qubits")
        if "asymptotic-negativity" in quantities:
            if "t" in cp[section]:
                fail(section, "t", "asymptotic-negativity evaluates at t = inf; drop 't'")
            times = (math.inf,)
        else:
            times = get(section, "t", lambda s: parse_values(s, "time"), required=True)
            if any(t < 0 for t in times):
                fail(section, "t", "times must be nonnegative")
        if len(times) > 1 and len(alphas) > 1:
            fail(section, "alpha", "sweep either t or alpha, not both")
        setting = get(section, "setting", lambda s: s.strip().lower(), "auto")
        if setting not in SETTING_MODES:
            fail(section, "setting", f"setting must be one of {SETTING_MODES}")
        reoptimize = get(section, "reoptimize", _truthy, False)
        cfg.scenarios.append(Scenario(name, qubits, state, state_file, alphas, orientation, spectral,
                                      times, quantities, setting, reoptimize))

    if not cfg.scenarios and not cfg.ensembles:
        raise ConfigParseError("config defines no [scenario] or [ensemble] sections")
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from None
    return parse_config(text, source=p.name, base_dir=p.parent)


# ---------------------------------------------------------------- evaluation


@lru_cache(maxsize=32)
def _channel(n: int, orientation: FieldOrientation, spectral: SpectralModel) -> DephasingChannel:
    return DephasingChannel(n, orientation, spectral)


def _base_state(sc: Scenario) -> np.ndarray:
    if sc.state_file is not None:
        return states.load_state_file(sc.state_file)
    return states.named_state(sc.state, sc.num_qubits)


def _resolve_setting(mode: str, state: str | None, rho0: np.ndarray, n: int) -> bell.SvetlichnySetting:
    """Measurement setting fixed at t = 0."""
    family = "w" if state == "w" else "ghz"
    if mode == "auto" and state in ("ghz", "w"):
        return bell.ghz_default(n) if state == "ghz" else bell.w_family(bell.W_ANGLE, n)
    if mode == "ghz":
        return bell.ghz_default(n)
    if mode == "w":
        return bell.w_family(bell.W_ANGLE, n)
    return bell.optimize_angles(rho0, family)[2]


@dataclass(frozen=True)
class _Task:
    label: str
    num_qubits: int
    rho0: np.ndarray
    t: float
    alpha: float
    orientation: FieldOrientation
    spectral: SpectralModel
    negativity: bool
    setting: bell.SvetlichnySetting | None
    reoptimize_family: str | None


def _evaluate(task: _Task) -> tuple:
    ch = _channel(task.num_qubits, task.orientation, task.spectral)
    rho = ch.asymptotic(task.rho0) if math.isinf(task.t) else ch.evolve(task.rho0, task.t)
    flags: list[str] = []
    e_val = s_val = None
    tag = ""
    if task.negativity:
        try:
            res = gme.genuine_negativity(rho)
            e_val = res.value
            if res.status.value != "optimal":
                flags.append(f"sdp-{res.status.value}")
        except (NumericalFailure, CertificateInvalid) as exc:
            flags.append("numerical-failure")
            log.error("%s at t=%s alpha=%s: %s", task.label, fmt(task.t), fmt(task.alpha), exc)
    setting = task.setting
    if task.reoptimize_family is not None:
        setting = bell.optimize_angles(rho, task.reoptimize_family)[2]
    if setting is not None:
        s_val = abs(bell.expectation(bell.svetlichny_operator(setting), rho))
        tag = setting.tag
    return task.label, task.t, task.alpha, task.orientation.n, e_val, s_val, tag, ";".join(flags) or "ok"


def _run_tasks(tasks: list[_Task], workers: int) -> list[tuple]:
    if workers <= 1 or len(tasks) < 2:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def format_record(rec: tuple) -> str:
    label, t, alpha, n, e_val, s_val, tag, status = rec
    return ",".join([label, fmt(t), fmt(alpha), fmt(n[0]), fmt(n[1]), fmt(n[2]),
                     fmt(e_val), fmt(s_val), tag, status])


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(records: list[tuple]) -> str:
    return "\n".join([CSV_HEADER] + [format_record(r) for r in records]) + "\n"


def _scenario_tasks(sc: Scenario) -> list[_Task]:
    base = _base_state(sc)
    tasks = []
    want_s = "svetlichny" in sc.quantities
    family = "w" if sc.state == "w" else "ghz"
    for alpha in sc.alphas:
        rho0 = states.white_noise_mix(base, alpha)
        setting = None
        if want_s and not sc.reoptimize:
            setting = _resolve_setting(sc.setting, sc.state, rho0, sc.num_qubits)
        for t in sc.times:
            tasks.append(_Task(sc.name, sc.num_qubits, rho0, t, alpha, sc.orientation, sc.spectral,
                               "negativity" in sc.quantities or "asymptotic-negativity" in sc.quantities,
                               setting, family if (want_s and sc.reoptimize) else None))
    return tasks


def _ensemble_tasks(spec: EnsembleSpec) -> list[_Task]:
    seed = states.RandomStateSeed(spec.seed)
    tasks = []
    for i in range(spec.count):
        rho0 = states.white_noise_mix(states.random_pure(spec.num_qubits, seed.derive(i)), spec.alpha)
        for t in spec.times:
            tasks.append(_Task(spec.label(i), spec.num_qubits, rho0, t, spec.alpha, spec.orientation,
                               spec.spectral, True, None, None))
    return tasks


def plateau_diagnostic(xs, values) -> tuple[float | None, float | None]:
    """Value at the last grid point and the largest step change over the final quarter of the axis."""
    pts = [(x, v) for x, v in zip(xs, values) if v is not None]
    if not pts:
        return None, None
    finite = [x for x, _ in pts if not math.isinf(x)]
    if len(finite) < 2:
        return pts[-1][1], None
    lo = finite[-1] - 0.25 * (finite[-1] - finite[0])
    tail = [v for x, v in pts if x >= lo - 1e-12]
    steps = [abs(b - a) for a, b in zip(tail, tail[1:])]
    return pts[-1][1], (max(steps) if steps else 0.0)


def threshold_crossing(xs, values, level: float = 0.0) -> float | None:
    """First point where ``values`` rises above ``level``, linearly interpolated."""
    pts = [(x, v) for x, v in zip(xs, values) if v is not None]
    for (x0, v0), (x1, v1) in zip(pts, pts[1:]):
        if v0 <= level < v1:
            return x0 + (level - v0) * (x1 - x0) / (v1 - v0)
    return None


@dataclass
class RunReport:
    output: Path
    mean_output: Path | None
    records: list[tuple]
    summary: list[str]
    failures: int

    @property
    def exit_code(self) -> int:
        return EXIT_NUMERICAL if self.failures else EXIT_OK


def _summaries(cfg: RunConfig, records: list[tuple], means: dict[str, list[tuple]]) -> list[str]:
    lines = []
    by_label: dict[str, list[tuple]] = {}
    for r in records:
        by_label.setdefault(r[0], []).append(r)
    for sc in cfg.scenarios:
        recs = by_label.get(sc.name, [])
        axis = 1 if sc.sweep_axis == "t" else 2
        for alpha in (sc.alphas if sc.sweep_axis == "t" else (None,)):
            sub = [r for r in recs if alpha is None or r[2] == alpha]
            xs = [r[axis] for r in sub]
            parts = [f"{sc.name}" + (f" (alpha={fmt(alpha)})" if alpha is not None and len(sc.alphas) > 1 else "")]
            if any(r[4] is not None for r in sub):
                last, drift = plateau_diagnostic(xs, [r[4] for r in sub])
                parts.append(f"E(last)={fmt(last)}")
                parts.append(f"max|dE| final quarter={fmt(drift)}")
                if sc.sweep_axis == "alpha":
                    parts.append(f"E>0 from alpha={fmt(threshold_crossing(xs, [r[4] for r in sub]))}")
            if any(r[5] is not None for r in sub):
                parts.append(f"S(last)={fmt(sub[-1][5])}")
            lines.append(": ".join(parts[:1]) + ": " + ", ".join(parts[1:]))
    for spec in cfg.ensembles:
        mrows = means.get(spec.name, [])
        last_t = spec.times[-1]
        finals = [r[4] for r in records if r[0].startswith(spec.name + "/") and r[1] == last_t]
        alive = sum(1 for v in finals if v is not None and v > 0.01)
        last, drift = plateau_diagnostic([r[1] for r in mrows], [r[4] for r in mrows])
        lines.append(f"{spec.name}: {alive}/{spec.count} samples with E>0.01 at t={fmt(last_t)}, "
                     f"mean E(last)={fmt(last)}, max|dE| final quarter={fmt(drift)}")
    return lines


def _ensemble_means(spec: EnsembleSpec, records: list[tuple]) -> list[tuple]:
    rows = []
    for t in spec.times:
        vals = [r[4] for r in records if r[0].startswith(spec.name + "/") and r[1] == t]
        ok = [v for v in vals if v is not None]
        mean = float(np.mean(ok)) if ok else None
        status = "ok" if len(ok) == len(vals) else f"partial-{len(ok)}-of-{len(vals)}"
        rows.append((f"{spec.name}/mean", t, spec.alpha, spec.orientation.n, mean, None, "", status))
    return rows


def gnuplot_script(cfg: RunConfig, csv_path: Path, mean_path: Path | None) -> str:
    name = csv_path.name
    lines = ["# generated plot script; run with: gnuplot " + csv_path.with_suffix(".gp").name,
             "set datafile separator ','",
             "set terminal pngcairo size 1000,650",
             f"set output '{csv_path.with_suffix('.png').name}'",
             "set key outside right",
             "set grid"]
    plots = []
    axes = set()
    for sc in cfg.scenarios:
        x = 2 if sc.sweep_axis == "t" else 3
        axes.add("t" if x == 2 else "alpha")
        y = 7 if any(q.endswith("negativity") for q in sc.quantities) else 8
        plots.append(f"'{name}' using (strcol(1) eq '{sc.name}' ? ${x} : 1/0):{y} with lines title '{sc.name}'")
    for spec in cfg.ensembles:
        axes.add("t")
        plots.append(f"for [i=0:{spec.count - 1}] '{name}' using "
                     f"(strcol(1) eq sprintf('{spec.name}/%0{len(str(spec.count - 1))}d', i) ? $2 : 1/0):7 "
                     "with lines lc rgb '#c0c0c0' notitle")
        if mean_path is not None:
            plots.append(f"'{mean_path.name}' using (strcol(1) eq '{spec.name}/mean' ? $2 : 1/0):7 "
                         f"with lines lw 3 dt 2 title '{spec.name} mean'")
    lines.append(f"set xlabel '{' / '.join(sorted(axes))}'")
    lines.append("set ylabel 'value'")
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def run_config(cfg: RunConfig, output: Path | None = None, workers: int | None = None,
               emit_gnuplot: bool = False, stream=None) -> RunReport:
    out = Path(output) if output is not None else cfg.output
    nworkers = workers if workers is not None else cfg.workers
    tasks: list[_Task] = []
    for sc in cfg.scenarios:
        tasks.extend(_scenario_tasks(sc))
    for spec in cfg.ensembles:
        tasks.extend(_ensemble_tasks(spec))
    records = _run_tasks(tasks, nworkers)
    write_atomic(out, csv_text(records))
    mean_path = None
    means: dict[str, list[tuple]] = {}
    if cfg.ensembles:
        mean_path = out.with_name(out.stem + ".mean.csv")
        for spec in cfg.ensembles:
            means[spec.name] = _ensemble_means(spec, records)
        write_atomic(mean_path, csv_text([r for rows in means.values() for r in rows]))
    if emit_gnuplot:
        write_atomic(out.with_suffix(".gp"), gnuplot_script(cfg, out, mean_path))
    summary = _summaries(cfg, records, means)
    if stream is not None:
        for line in summary:
            print(line, file=stream)
        print(f"wrote {out}" + (f" and {mean_path}" if mean_path else ""), file=stream)
    failures = sum(1 for r in records if "numerical-failure" in r[7])
    return RunReport(out, mean_path, records, summary, failures)


def run_scenario(path, output=None, workers=None, emit_gnuplot=False, stream=None) -> RunReport:
    """Parse the config at ``path``, run every grid point and write the CSV."""
    return run_config(load_config(path), output, workers, emit_gnuplot, stream)


def ensemble(num_qubits: int, count: int, alpha: float, orientation, seed: int, times,
             output, spectral: SpectralModel = STANDARD_CAUCHY, name: str = "ensemble",
             workers: int = 1, emit_gnuplot: bool = False, stream=None) -> RunReport:
    if count < 1:
        raise ConfigParseError("count must be at least 1", field="count")
    orient = orientation if isinstance(orientation, FieldOrientation) else FieldOrientation(orientation)
    spec = EnsembleSpec(name, num_qubits, count, alpha, orient, spectral, seed, tuple(times))
    cfg = RunConfig(source="<ensemble>", output=Path(output), workers=workers, ensembles=[spec])
    return run_config(cfg, emit_gnuplot=emit_gnuplot, stream=stream)


# ---------------------------------------------------------------- recipes


def recipe_names() -> list[str]:
    root = resources.files("colldeph") / "recipes"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def recipe_text(name: str) -> str:
    root = resources.files("colldeph") / "recipes"
    target = root / (name if name.endswith(".cfg") else name + ".cfg")
    if not target.is_file():
        raise ConfigParseError(f"no bundled recipe {name!r}; available: {', '.join(recipe_names())}")
    return target.read_text()


# ---------------------------------------------------------------- argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_state_args(p: argparse.ArgumentParser, with_t: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help=f"named state: {', '.join(sorted(states.NAMED_STATES))}")
    src.add_argument("--state-file", help="density matrix in the text matrix format")
    p.add_argument("--qubits", type=int, help="qubit count (required with --state)")
    p.add_argument("--alpha", type=float, default=1.0, help="weight of the state against white noise")
    p.add_argument("--orientation", nargs=3, type=float, default=[1.0, 0.0, 0.0], metavar=("NX", "NY", "NZ"))
    p.add_argument("--lorentzian", nargs=2, type=float, metavar=("CENTER", "WIDTH"),
                   help="shifted Lorentzian frequency distribution instead of the standard Cauchy one")
    if with_t:
        p.add_argument("--t", type=float, default=0.0, help="dimensionless time")


def _state_from_args(args) -> tuple[np.ndarray, DephasingChannel, str | None]:
    if args.state_file:
        base = states.load_state_file(args.state_file)
        n = states.num_qubits_of(base)
        if args.qubits is not None and args.qubits != n:
            raise ConfigParseError(f"--qubits {args.qubits} does not match the {n}-qubit state file")
        name = None
    else:
        if args.qubits is None:
            raise ConfigParseError("--qubits is required with --state", field="qubits")
        n = args.qubits
        name = args.state.lower()
        base = states.named_state(name, n)
    rho0 = states.white_noise_mix(base, args.alpha)
    spectral = SpectralModel.lorentzian(*args.lorentzian) if args.lorentzian else STANDARD_CAUCHY
    ch = DephasingChannel(n, parse_orientation(args.orientation), spectral)
    return rho0, ch, name


def _cmd_evolve(args) -> int:
    rho0, ch, _ = _state_from_args(args)
    text = states.format_matrix(ch.evolve(rho0, args.t))
    if args.output:
        write_atomic(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_negativity(args) -> int:
    rho0, ch, _ = _state_from_args(args)
    res = gme.genuine_negativity(ch.evolve(rho0, args.t))
    print(f"{res.value:.6f}")
    if args.export_witness:
        write_atomic(Path(args.export_witness), res.certificate.to_text())
    return EXIT_OK


def _cmd_asymptotic(args) -> int:
    rho0, ch, _ = _state_from_args(args)
    rho = ch.asymptotic(rho0)
    print(f"{gme.genuine_negativity(rho).value:.6f}")
    if args.output:
        write_atomic(Path(args.output), states.format_matrix(rho))
    return EXIT_OK


def _cmd_svetlichny(args) -> int:
    rho0, ch, name = _state_from_args(args)
    rho = ch.evolve(rho0, args.t)
    n = ch.num_qubits
    family = args.family or ("w" if name == "w" else "ghz")
    if args.angles is not None:
        angles = [math.radians(a) for a in args.angles]
        setting = bell.w_family(angles[0], n) if family == "w" else bell.ghz_family(*angles)
    elif args.optimize:
        setting = bell.optimize_angles(rho, family)[2]
    else:
        setting = _resolve_setting("auto" if args.family is None else family, name, rho0, n)
    value = abs(bell.expectation(bell.svetlichny_operator(setting), rho))
    print(f"{value:.6f}")
    print(f"setting {setting.tag}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    rho0, ch, _ = _state_from_args(args)
    cert = gme.WitnessCertificate.load(args.certificate)
    try:
        value = gme.verify_certificate(ch.evolve(rho0, args.t), cert)
    except CertificateInvalid as exc:
        print(f"INVALID ({exc.check}): {exc}")
        return EXIT_NUMERICAL
    print(f"{value:.6f}")
    print("OK")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    if args.list_recipes:
        print("\n".join(recipe_names()))
        return EXIT_OK
    if (args.config is None) == (args.recipe is None):
        raise ConfigParseError("give a config file or --recipe NAME (not both)")
    if args.recipe:
        cfg = parse_config(recipe_text(args.recipe), source=args.recipe + ".cfg")
    else:
        cfg = load_config(args.config)
    report = run_config(cfg, args.output, args.workers, args.emit_gnuplot, stream=sys.stdout)
    return report.exit_code


def _cmd_ensemble(args) -> int:
    spectral = SpectralModel.lorentzian(*args.lorentzian) if args.lorentzian else STANDARD_CAUCHY
    try:
        times = parse_values(args.t, "time")
    except ValueError as exc:
        raise ConfigParseError(str(exc), field="t") from None
    report = ensemble(args.qubits, args.count, args.alpha, parse_orientation(args.orientation), args.seed,
                      times, args.output, spectral, args.name, args.workers, args.emit_gnuplot, sys.stdout)
    return report.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="colldeph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="print rho(t) in the text matrix format")
    _add_state_args(p)
    p.add_argument("--output", help="write the matrix here instead of stdout")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("negativity", help="genuine multipartite negativity of rho(t)")
    _add_state_args(p)
    p.add_argument("--export-witness", metavar="PATH", help="save the witness certificate")
    p.set_defaults(func=_cmd_negativity)

    p = sub.add_parser("asymptotic", help="genuine negativity of the t -> infinity state")
    _add_state_args(p, with_t=False)
    p.add_argument("--output", help="also write the asymptotic state matrix here")
    p.set_defaults(func=_cmd_asymptotic)

    p = sub.add_parser("svetlichny", help="|<S>| on rho(t)")
    _add_state_args(p)
    p.add_argument("--optimize", action="store_true", help="maximize over the setting family")
    p.add_argument("--family", choices=("ghz", "w"), help="setting family (default: from the state)")
    p.add_argument("--angles", nargs="+", type=float, metavar="DEG", help="explicit angles in degrees")
    p.set_defaults(func=_cmd_svetlichny)

    p = sub.add_parser("sweep", help="run a scenario config or bundled recipe and write CSV")
    p.add_argument("config", nargs="?", help="INI-style scenario file")
    p.add_argument("--recipe", help="bundled recipe name (see --list-recipes)")
    p.add_argument("--list-recipes", action="store_true")
    p.add_argument("--output", help="CSV path (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes (overrides the config)")
    p.add_argument("--emit-gnuplot", action="store_true", help="also write a gnuplot script next to the CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("ensemble", help="genuine negativity of seeded random states over time")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--orientation", nargs=3, type=float, default=[1.0, 0.0, 0.0], metavar=("NX", "NY", "NZ"))
    p.add_argument("--lorentzian", nargs=2, type=float, metavar=("CENTER", "WIDTH"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--t", required=True, help="times, e.g. 0:12:0.5")
    p.add_argument("--name", default="ensemble")
    p.add_argument("--output", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit-gnuplot", action="store_true")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("verify-witness", help="audit a saved witness certificate against a state")
    _add_state_args(p)
    p.add_argument("--certificate", required=True)
    p.set_defaults(func=_cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (NumericalFailure, CertificateInvalid) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ColldephError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
