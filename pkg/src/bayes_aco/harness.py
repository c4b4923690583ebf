"""Seeded experiments: baseline-vs-improved comparisons, parameter sweeps
and convergence stability.

An experiment is described by a plain ``key = value`` file::

    map = maps/dense_area.grid
    algorithm = both
    replicates = 20
    rounds = 3
    ants = 50
    weights = 0.2,0.2,0.25,0.35

Blank lines and ``#`` comments are ignored. Relative map paths resolve
against the spec file's directory, then against the bundled maps.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path as FilePath

import numpy as np

from .bayes import CruiseReport, CruiseSettings, FactorWeights, grid_csv, run_cruises
from .colony import AcoConfig
from .field import DROUGHT_MAX, MoistureModel
from .grid import GridMap, check_reachable, load_map

ARMS = ("baseline", "improved")


class SpecError(ValueError):
    """Invalid experiment spec (bad key, bad value, missing map file)."""


def bundled_map(name: str) -> FilePath | None:
    """Path of a map shipped with the package, or None."""
    stem = FilePath(name).name
    if not stem.endswith(".grid"):
        stem += ".grid"
    ref = resources.files("bayes_aco").joinpath("maps", stem)
    return FilePath(str(ref)) if ref.is_file() else None


def bundled_maps() -> list[str]:
    folder = resources.files("bayes_aco").joinpath("maps")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".grid"))


def resolve_map(path, base: FilePath | None = None) -> FilePath:
    p = FilePath(path)
    candidates = [p] if p.is_absolute() else [(base or FilePath.cwd()) / p, p]
    for c in candidates:
        if c.is_file():
            return c
    packaged = bundled_map(str(path))
    if packaged is not None:
        return packaged
    raise SpecError(f"map file not found: {path}")


@dataclass(frozen=True)
class ExperimentSpec:
    map_path: FilePath
    arms: tuple[str, ...] = ARMS
    config: AcoConfig = field(default_factory=AcoConfig)
    weights: FactorWeights = field(default_factory=FactorWeights)
    rounds: int = 3
    moisture: MoistureModel = field(default_factory=MoistureModel)
    drought_max: int = DROUGHT_MAX
    irrigation_radius: int = 1
    risk_decrement: float = 0.1
    replicates: int = 20
    seed_base: int = 0
    # acceptance thresholds for the information-gain comparison
    min_info_gain: float = 1.10
    max_length_inflation: float = 1.25

    def __post_init__(self):
        if self.replicates < 1:
            raise SpecError("replicates must be >= 1")
        if self.rounds < 1:
            raise SpecError("rounds must be >= 1")
        if not self.arms or any(a not in ARMS for a in self.arms):
            raise SpecError(f"algorithm must be baseline, improved or both, got {self.arms}")
        if not FilePath(self.map_path).is_file():
            raise SpecError(f"map file not found: {self.map_path}")

    def load_grid(self) -> GridMap:
        return load_map(self.map_path)

    def settings(self) -> CruiseSettings:
        return CruiseSettings(
            weights=self.weights,
            drought_max=self.drought_max,
            irrigation_radius=self.irrigation_radius,
            risk_decrement=self.risk_decrement,
        )

    def with_overrides(self, **values) -> "ExperimentSpec":
        """Apply flat overrides (same keys as the spec file, parsed values)."""
        return _build(self, values)


_CONFIG_KEYS = {
    "ants": ("ants", int), "m": ("ants", int),
    "generations": ("generations", int), "k": ("generations", int),
    "alpha": ("alpha", float), "beta": ("beta", float), "q": ("q", float),
    "evaporation": ("evaporation", float), "rho": ("evaporation", float),
    "initial_pheromone": ("initial_pheromone", float),
    "max_steps": ("max_steps", int), "seed": ("seed", int),
}
_MOISTURE_KEYS = {
    "decay_per_round": float, "dry_threshold": float, "irrigation_refill": float,
}
_SPEC_KEYS = {
    "rounds": int, "replicates": int, "seed_base": int, "drought_max": int,
    "irrigation_radius": int, "risk_decrement": float,
    "min_info_gain": float, "max_length_inflation": float,
}
_LAMBDAS = {"lambda1": 0, "lambda2": 1, "lambda3": 2, "lambda4": 3,
            "λ1": 0, "λ2": 1, "λ3": 2, "λ4": 3}


def _arms(value: str) -> tuple[str, ...]:
    v = value.strip().lower()
    if v == "both":
        return ARMS
    arms = tuple(a.strip() for a in v.split(",") if a.strip())
    if not arms or any(a not in ARMS for a in arms):
        raise SpecError(f"unknown algorithm {value!r}")
    return arms


def _build(base: ExperimentSpec | None, values: dict, spec_dir: FilePath | None = None) -> ExperimentSpec:
    cfg = {} if base is None else {f.name: getattr(base.config, f.name) for f in fields(AcoConfig)}
    moist = {} if base is None else {f.name: getattr(base.moisture, f.name) for f in fields(MoistureModel)}
    top = {} if base is None else {
        k: getattr(base, k) for k in ("map_path", "arms", "weights", *_SPEC_KEYS)
    }
    lambdas = None
    for raw_key, value in values.items():
        key = raw_key.strip().lower() if raw_key not in _LAMBDAS else raw_key
        try:
            if key == "map":
                top["map_path"] = resolve_map(value, spec_dir) if isinstance(value, str) else FilePath(value)
            elif key in ("algorithm", "algo", "arms"):
                top["arms"] = _arms(value) if isinstance(value, str) else tuple(value)
            elif key == "weights":
                top["weights"] = value if isinstance(value, FactorWeights) else FactorWeights.parse(str(value))
            elif key in _LAMBDAS:
                if lambdas is None:
                    lambdas = list(top.get("weights", FactorWeights()).as_tuple())
                lambdas[_LAMBDAS[key]] = float(value)
            elif key in _CONFIG_KEYS:
                name, conv = _CONFIG_KEYS[key]
                cfg[name] = None if str(value).lower() == "none" else conv(value)
            elif key in _MOISTURE_KEYS:
                moist[key] = _MOISTURE_KEYS[key](value)
            elif key in _SPEC_KEYS:
                top[key] = _SPEC_KEYS[key](value)
            else:
                raise SpecError(f"unknown spec key {raw_key!r}")
        except SpecError:
            raise
        except (TypeError, ValueError) as exc:
            raise SpecError(f"bad value for {raw_key!r}: {exc}") from exc
    if lambdas is not None:
        try:
            top["weights"] = FactorWeights(*lambdas)
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
    if "map_path" not in top:
        raise SpecError("spec has no 'map' entry")
    try:
        return ExperimentSpec(
            config=AcoConfig(**cfg), moisture=MoistureModel(**moist), **top
        )
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from exc


def parse_spec(text: str, spec_dir: FilePath | None = None) -> ExperimentSpec:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return _build(None, values, spec_dir)


def spec_from_values(values: dict, spec_dir: FilePath | None = None) -> ExperimentSpec:
    """Build a spec from already split ``key -> value`` pairs."""
    return _build(None, values, spec_dir)


def load_spec(path) -> ExperimentSpec:
    path = FilePath(path)
    if not path.is_file():
        raise SpecError(f"spec file not found: {path}")
    return parse_spec(path.read_text(), path.parent)


def bundled_spec(name: str) -> FilePath:
    ref = resources.files("bayes_aco").joinpath("experiments", f"{name}.spec")
    if not ref.is_file():
        raise SpecError(f"no bundled experiment named {name!r}")
    return FilePath(str(ref))


# ------------------------------------------------------------------ runs


@dataclass
class ArmSummary:
    """Aggregates over the replicates of one arm."""

    arm: str
    reports: list  # CruiseReport per replicate

    @property
    def replicates(self) -> int:
        return len(self.reports)

    def _per_round(self, attr) -> np.ndarray:
        return np.array([[getattr(r, attr) for r in rep.rounds] for rep in self.reports], dtype=float)

    @property
    def lengths(self) -> np.ndarray:
        """``(replicates, rounds)`` path lengths."""
        return np.array([[r.path.length for r in rep.rounds] for rep in self.reports])

    @property
    def coverage(self) -> np.ndarray:
        return self._per_round("coverage")

    @property
    def newly_explored(self) -> np.ndarray:
        return self._per_round("newly_explored")

    @property
    def best_length(self) -> np.ndarray:
        """Round-1 length per replicate, the plain optimisation result."""
        return self.lengths[:, 0]

    def later_rounds(self) -> slice:
        return slice(1, None) if self.lengths.shape[1] > 1 else slice(None)

    @property
    def info_per_length(self) -> float:
        """Mean newly explored cells per unit length over rounds >= 2
        (round 1 if that is the only one)."""
        s = self.later_rounds()
        return float((self.newly_explored[:, s] / self.lengths[:, s]).mean())

    @property
    def mean_later_length(self) -> float:
        return float(self.lengths[:, self.later_rounds()].mean())

    @property
    def mean_irrigation(self) -> np.ndarray:
        return np.mean([rep.irrigation_count for rep in self.reports], axis=0)


@dataclass
class ComparisonReport:
    spec: ExperimentSpec
    arms: dict  # arm name -> ArmSummary

    def info_gain(self) -> float:
        """Improved over baseline information-per-length ratio."""
        b = self.arms["baseline"].info_per_length
        i = self.arms["improved"].info_per_length
        if b == 0:
            return math.inf if i > 0 else 1.0
        return i / b

    def length_inflation(self) -> float:
        return self.arms["improved"].mean_later_length / self.arms["baseline"].mean_later_length

    def meets_thresholds(self) -> bool:
        return (
            self.info_gain() >= self.spec.min_info_gain
            and self.length_inflation() <= self.spec.max_length_inflation
        )

    def to_csv(self) -> str:
        """One row per arm and round with mean/std over replicates."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([
            "arm", "round", "replicates", "mean_length", "std_length",
            "mean_coverage", "std_coverage", "mean_newly_explored",
            "mean_info_per_length",
        ])
        for name, arm in self.arms.items():
            lengths, cov, new = arm.lengths, arm.coverage, arm.newly_explored
            for j in range(lengths.shape[1]):
                w.writerow([
                    name, j + 1, arm.replicates,
                    _f(lengths[:, j].mean()), _f(lengths[:, j].std()),
                    _f(cov[:, j].mean()), _f(cov[:, j].std()),
                    _f(new[:, j].mean()), _f((new[:, j] / lengths[:, j]).mean()),
                ])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([
            "arm", "replicates", "mean_best_length", "std_best_length",
            "mean_later_length", "mean_info_per_length", "mean_final_coverage",
        ])
        for name, arm in self.arms.items():
            w.writerow([
                name, arm.replicates, _f(arm.best_length.mean()), _f(arm.best_length.std()),
                _f(arm.mean_later_length), _f(arm.info_per_length),
                _f(arm.coverage[:, -1].mean()),
            ])
        return buf.getvalue()

    def write(self, out_dir) -> list[FilePath]:
        out = FilePath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [out / "report.csv", out / "summary.csv"]
        written[0].write_text(self.to_csv())
        written[1].write_text(self.summary_csv())
        for name, arm in self.arms.items():
            for rep, cruise in enumerate(arm.reports):
                p = out / f"convergence_{name}_{rep}.csv"
                p.write_text(cruise.rounds[0].convergence.to_csv())
                written.append(p)
            p = out / f"irrigation_grid_{name}.csv"
            p.write_text(grid_csv(arm.mean_irrigation))
            written.append(p)
        return written


def _f(x) -> str:
    return f"{float(x):.6f}"


def _replicate(args) -> CruiseReport:
    spec, grid, arm, rep = args
    config = replace(spec.config, seed=spec.seed_base + rep)
    return run_cruises(
        grid, spec.rounds, spec.weights, config, spec.moisture, spec.settings(), arm
    )


def run_experiment(spec: ExperimentSpec, out_dir=None, jobs: int = 1) -> ComparisonReport:
    """Run ``replicates`` seeded cruises per arm (seed = seed_base + replicate).

    Results do not depend on ``jobs``; each replicate owns its RNG streams.
    """
    grid = spec.load_grid()
    check_reachable(grid)
    tasks = [(spec, grid, arm, rep) for arm in spec.arms for rep in range(spec.replicates)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_replicate, tasks))
    else:
        results = [_replicate(t) for t in tasks]
    arms = {}
    for (_, _, arm, _), rep in zip(tasks, results):
        arms.setdefault(arm, ArmSummary(arm, [])).reports.append(rep)
    report = ComparisonReport(spec, arms)
    if out_dir is not None:
        report.write(out_dir)
    return report


SWEEP_PARAMETERS = {
    "M": "ants", "K": "generations", "alpha": "alpha", "beta": "beta",
    "evaporation": "evaporation", "rounds": "rounds",
    "lambda1": "lambda1", "lambda2": "lambda2", "lambda3": "lambda3", "lambda4": "lambda4",
}


def sweep(spec: ExperimentSpec, parameter: str, values, out_dir=None, jobs: int = 1):
    """One comparison per value of ``parameter``; returns ``[(value, report)]``."""
    key = parameter.replace("λ", "lambda")
    if key not in SWEEP_PARAMETERS:
        raise SpecError(
            f"unknown sweep parameter {parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}"
        )
    values = list(values)
    if not values:
        raise SpecError("sweep needs at least one value")
    results = []
    for v in values:
        point = spec.with_overrides(**{SWEEP_PARAMETERS[key]: v})
        results.append((v, run_experiment(point, jobs=jobs)))
    if out_dir is not None:
        out = FilePath(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep_summary.csv").write_text(sweep_csv(key, results))
    return results


def sweep_csv(parameter: str, results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([
        "parameter", "value", "arm", "replicates", "mean_best_length",
        "std_best_length", "mean_info_per_length", "mean_final_coverage",
        "stable_fraction",
    ])
    for value, report in results:
        for name, arm in report.arms.items():
            stable = [
                stability_generation(rep.rounds[0].convergence.best_so_far) is not None
                for rep in arm.reports
            ]
            w.writerow([
                parameter, value, name, arm.replicates,
                _f(arm.best_length.mean()), _f(arm.best_length.std()),
                _f(arm.info_per_length), _f(arm.coverage[:, -1].mean()),
                _f(np.mean(stable)),
            ])
    return buf.getvalue()


def stability_generation(series, window: int = 10, tolerance: float = 1.0) -> int | None:
    """First generation ``g`` whose best length moves by less than
    ``tolerance`` over generations ``g .. g + window``; None if the series
    never settles (or is shorter than the window)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    s = np.asarray(series, dtype=float)
    for g in range(len(s) - window):
        chunk = s[g : g + window + 1]
        if not np.isfinite(chunk).all():
            continue
        if chunk.max() - chunk.min() < tolerance:
            return g
    return None
