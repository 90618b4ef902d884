"""Declarative CRB sweeps over snapshot count and SNR.

A scenario file is YAML with a fixed schema (see :class:`ScenarioSpec`);
unknown keys are rejected.  Angles are given in degrees.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__
from .array_model import (
    ArrayConfig,
    DiscreteRandomThreshold,
    draw_threshold,
    orthogonal_scene,
    synthesize_scene,
)
from .arrangement import Arrangement, parse_arrangement
from .fisher_crb import (
    UnidentifiableError,
    crb_asymptotic,
    crb_general,
    crb_optimal_hadamard,
)

log = logging.getLogger(__name__)

CSV_HEADER = ["arrangement", "formula", "N", "snr_db", "target", "crb", "crb_db", "trials"]
FORMULAS = ("exact", "asymptotic", "general")
MAX_EXCLUDED_FRACTION = 0.10
HIGH_PRECISION_BASELINE = "High-precision"
ONE_BIT_BASELINE = "One-bit"


class ScenarioError(RuntimeError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ArraySection(_Strict):
    num_elements: int = Field(ge=2)


class SceneSection(_Strict):
    angles_deg: list[float] = Field(min_length=1)
    powers: list[float] = Field(min_length=1)
    snapshots: list[int] = Field(min_length=1)
    snr_db: list[float] = Field(min_length=1)

    @field_validator("angles_deg")
    @classmethod
    def _inside(cls, v):
        if any(abs(a) >= 90 for a in v):
            raise ValueError("angles must lie strictly inside (-90, 90) degrees")
        return v

    @field_validator("powers")
    @classmethod
    def _positive(cls, v):
        if any(p <= 0 for p in v):
            raise ValueError("powers must be positive")
        return v

    @field_validator("snapshots")
    @classmethod
    def _snapshots(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("snapshot counts must be >= 1")
        return v

    @model_validator(mode="after")
    def _lengths(self):
        if len(self.powers) != len(self.angles_deg):
            raise ValueError("powers and angles_deg must have the same length")
        return self


class ThresholdSection(_Strict):
    h_max: float = Field(default=2.0, gt=0)
    levels: int = Field(default=8, ge=2)


class ScenarioSpec(_Strict):
    name: str = "scenario"
    array: ArraySection
    arrangements: dict[str, Union[str, list[int]]]
    scene: SceneSection
    threshold: ThresholdSection = ThresholdSection()
    trials: int = Field(default=50, ge=1)
    seed: int = Field(default=0, ge=0)
    formulas: list[Literal["exact", "asymptotic", "general"]] = list(FORMULAS)
    baselines: Union[bool, list[Literal["High-precision", "One-bit"]]] = False
    output: str | None = None

    @model_validator(mode="after")
    def _arrangements_fit(self):
        if not self.arrangements and not self.baselines:
            raise ValueError("no arrangements to evaluate")
        for name in self.arrangements:
            self.resolve(name)
        if len(self.scene.angles_deg) >= self.array.num_elements:
            raise ValueError("need fewer sources than array elements")
        return self

    def resolve(self, name: str) -> Arrangement:
        M = self.array.num_elements
        entry = self.arrangements[name]
        if isinstance(entry, str):
            return parse_arrangement(entry, M)
        if len(entry) != M:
            raise ValueError(f"arrangement {name!r} has length {len(entry)}, expected {M}")
        return Arrangement.from_indicator(np.array(entry))

    def named_arrangements(self) -> list[tuple[str, Arrangement]]:
        out = [(name, self.resolve(name)) for name in self.arrangements]
        if self.baselines is True:
            wanted = [HIGH_PRECISION_BASELINE, ONE_BIT_BASELINE]
        else:
            wanted = list(self.baselines or [])
        M = self.array.num_elements
        if HIGH_PRECISION_BASELINE in wanted:
            out.append((HIGH_PRECISION_BASELINE, Arrangement.high_precision(M)))
        if ONE_BIT_BASELINE in wanted:
            out.append((ONE_BIT_BASELINE, Arrangement.one_bit(M)))
        return out


def load_spec(path) -> ScenarioSpec:
    """Read a scenario from a YAML file, or a bundled scenario by name."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("mixedadc.scenarios").joinpath(f"{path}.yaml")
        if not bundled.is_file():
            raise FileNotFoundError(f"scenario file not found: {path}")
        text = bundled.read_text()
    else:
        text = p.read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"scenario {path} is not a mapping")
    return ScenarioSpec.model_validate(data)


def bundled_scenarios() -> list[str]:
    return sorted(f.name[:-5] for f in resources.files("mixedadc.scenarios").iterdir()
                  if f.name.endswith(".yaml"))


@dataclass(frozen=True)
class Row:
    arrangement: str
    formula: str
    N: int
    snr_db: float
    target: int
    crb: float
    trials: int

    @property
    def crb_db(self) -> float:
        return 10.0 * math.log10(self.crb)


@dataclass
class ResultTable:
    rows: list[Row] = field(default_factory=list)
    exclusions: dict[str, int] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def select(self, arrangement=None, formula=None, N=None, snr_db=None, target=None):
        keep = []
        for r in self.rows:
            if arrangement is not None and r.arrangement != arrangement:
                continue
            if formula is not None and r.formula != formula:
                continue
            if N is not None and r.N != N:
                continue
            if snr_db is not None and r.snr_db != snr_db:
                continue
            if target is not None and r.target != target:
                continue
            keep.append(r)
        return keep

    def values(self, **kw) -> np.ndarray:
        return np.array([r.crb for r in self.select(**kw)])


def noise_variance_for(snr_db: float) -> float:
    """Reference source power is 1, so sigma^2 = 1 / SNR."""
    return 10.0 ** (-snr_db / 10.0)


def trial_rng(seed: int, n_index: int, snr_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, n_index, snr_index, trial]))


def reference_scene(cfg: ArrayConfig, N: int, angles, powers, noise_variance: float, seed=0):
    """Scene used for the exact optimal-threshold CRB.

    Orthogonal DFT-phase sources when N >= K (sample covariance exactly
    diagonal), random phases otherwise.
    """
    angles = np.atleast_1d(angles)
    if N >= angles.size:
        return orthogonal_scene(cfg, N, angles, powers, noise_variance)
    return synthesize_scene(cfg, angles.size, N, angles, powers, seed, noise_variance=noise_variance)


def general_trials(cfg: ArrayConfig, arrangements, angles, powers, noise_variance: float, N: int,
                   scheme: DiscreteRandomThreshold, trials: int, rng_for_trial):
    """Mean general-threshold CRB diagonal per arrangement over random draws.

    Every trial draws fresh source phases and a fresh threshold matrix from
    ``rng_for_trial(trial)``; all arrangements see the same draws.  Returns
    ``{name: (mean_diagonal or None, used_trials)}``.
    """
    angles = np.atleast_1d(angles)
    K = angles.size
    sums = {name: np.zeros(K) for name, _ in arrangements}
    counts = {name: 0 for name, _ in arrangements}
    for trial in range(trials):
        rng = rng_for_trial(trial)
        scene = synthesize_scene(cfg, K, N, angles, powers, rng, noise_variance=noise_variance)
        H = draw_threshold(scheme, (cfg.M, N), rng)
        for name, arr in arrangements:
            try:
                sums[name] += crb_general(scene, cfg, arr, H).diagonal
                counts[name] += 1
            except UnidentifiableError as exc:
                log.warning("trial %d excluded for %s at N=%d, sigma2=%g: %s",
                            trial, name, N, noise_variance, exc)
    return {name: (sums[name] / counts[name] if counts[name] else None, counts[name])
            for name, _ in arrangements}


def _grid_point(spec: ScenarioSpec, arrangements, n_index, snr_index):
    cfg = ArrayConfig(spec.array.num_elements)
    N = spec.scene.snapshots[n_index]
    snr_db = spec.scene.snr_db[snr_index]
    sigma2 = noise_variance_for(snr_db)
    angles = np.deg2rad(spec.scene.angles_deg)
    powers = np.array(spec.scene.powers)
    results = {}   # (name, formula) -> (diag, count)
    excluded = {}

    if "exact" in spec.formulas:
        scene = reference_scene(cfg, N, angles, powers, sigma2,
                                trial_rng(spec.seed, n_index, snr_index, 0))
        for name, arr in arrangements:
            results[name, "exact"] = (crb_optimal_hadamard(scene, cfg, arr).diagonal, 1)

    if "asymptotic" in spec.formulas:
        for name, arr in arrangements:
            results[name, "asymptotic"] = (crb_asymptotic(angles, powers / sigma2, arr, N).diagonal, 1)

    if "general" in spec.formulas:
        scheme = DiscreteRandomThreshold(spec.threshold.h_max, spec.threshold.levels)
        means = general_trials(cfg, arrangements, angles, powers, sigma2, N, scheme, spec.trials,
                               lambda t: trial_rng(spec.seed, n_index, snr_index, t))
        for name, (mean, used) in means.items():
            dropped = spec.trials - used
            excluded[name] = dropped
            if dropped > MAX_EXCLUDED_FRACTION * spec.trials:
                raise ScenarioError(
                    f"{dropped} of {spec.trials} trials singular for {name} at N={N}, SNR={snr_db:g} dB")
            results[name, "general"] = (mean, used)
    return N, snr_db, results, excluded


def run_scenario(spec: ScenarioSpec, workers: int = 1) -> ResultTable:
    """Evaluate every (N, SNR) grid point for every arrangement and formula.

    Random draws depend only on (seed, grid index, trial), so any ``workers``
    count produces the same table.
    """
    arrangements = spec.named_arrangements()
    grid = [(i, j) for i in range(len(spec.scene.snapshots)) for j in range(len(spec.scene.snr_db))]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            points = list(pool.map(lambda ij: _grid_point(spec, arrangements, *ij), grid))
    else:
        points = [_grid_point(spec, arrangements, i, j) for i, j in grid]

    rows = []
    exclusions: dict[str, int] = {}
    formulas = [f for f in FORMULAS if f in spec.formulas]
    for name, _ in arrangements:
        for formula in formulas:
            for N, snr_db, results, excluded in points:
                diag, count = results[name, formula]
                for k, value in enumerate(diag):
                    rows.append(Row(name, formula, N, snr_db, k + 1, float(value), count))
                if formula == "general":
                    key = f"{name}|N={N}|snr_db={snr_db:g}"
                    exclusions[key] = excluded[name]
    metadata = {
        "scenario": spec.name,
        "seed": spec.seed,
        "trials": spec.trials,
        "version": __version__,
        "source_model": "constant-modulus sources, i.i.d. uniform phases (general); "
                        "orthogonal DFT-phase sources (exact)",
        "general_statistic": "mean over trials of the per-target CRB",
        "snr_reference_power": 1.0,
        "units": "crb in rad^2, crb_db = 10 log10(crb)",
        "excluded_trials": exclusions,
    }
    return ResultTable(rows, exclusions, metadata)


def _fmt(x: float) -> str:
    return f"{x:.9e}"


def emit_table(table: ResultTable, path, metadata: bool = True) -> Path:
    """Write the CSV (and a ``.meta.json`` sidecar unless ``metadata`` is false)."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in table.rows:
                writer.writerow([r.arrangement, r.formula, r.N, f"{r.snr_db:g}", r.target,
                                 _fmt(r.crb), _fmt(r.crb_db), r.trials])
        if metadata:
            sidecar = sidecar_path(path)
            sidecar.write_text(json.dumps(table.metadata, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def read_table(path) -> ResultTable:
    rows = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        for rec in reader:
            rows.append(Row(rec["arrangement"], rec["formula"], int(rec["N"]), float(rec["snr_db"]),
                            int(rec["target"]), float(rec["crb"]), int(rec["trials"])))
    return ResultTable(rows)
