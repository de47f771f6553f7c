"""Replicated Monte Carlo comparison of Riesz-representer estimators.

Replication ``r`` generates its dataset with seed ``master_seed + r`` and
nothing else, so any replication can be rerun on its own.  Rows are ordered
by sample size, then estimator (config order), then replication.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import linear, neural
from .basis import FeatureBuilder, build_features, gram
from .data import (
    AteDgpConfig,
    Dataset,
    ShiftDgpConfig,
    generate_ate_dgp,
    generate_shift_dgp,
    replication_seed,
)
from .errors import ConfigurationError, RieszError
from .evaluation import fit_outcome_model, plug_in_estimates
from .functional import ATE, SHIFT_MEAN, FunctionalSpec, basis_moments

log = logging.getLogger(__name__)

LINEAR_ESTIMATORS = ("riesz-loss", "rayleigh", "lasso", "rayleigh-l1")
NEURAL_ESTIMATORS = ("nn-riesz", "nn-rayleigh")
ESTIMATORS = LINEAR_ESTIMATORS + NEURAL_ESTIMATORS


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    l2: float = 0.0
    l1: float = 0.0
    hidden: tuple = (32, 32)
    lr: float = 1e-2
    epochs: int = 2000
    init_seed: int = 0
    label: Optional[str] = None

    def __post_init__(self):
        if self.name not in ESTIMATORS:
            raise ConfigurationError(f"unknown estimator {self.name!r}; expected one of {', '.join(ESTIMATORS)}")
        if self.l1 < 0 or self.l2 < 0:
            raise ConfigurationError("penalties must be nonnegative")
        if self.name in ("lasso", "rayleigh-l1") and not self.l1 > 0:
            raise ConfigurationError(f"{self.name} needs l1 > 0")
        if self.name == "lasso" and self.l2 > 0:
            raise ConfigurationError("lasso does not take an l2 penalty")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def display_name(self) -> str:
        return self.label or self.name


@dataclass
class EstimatorResult:
    alpha_hat: np.ndarray
    objective_value: float
    fit: Union[linear.LinearRieszFit, neural.NeuralRieszFit]


def fit_estimator(data: Dataset, spec: FunctionalSpec, features, est: EstimatorSpec, seed_offset: int = 0) -> EstimatorResult:
    """Fit one estimator and return its in-sample representer values."""
    if est.name in LINEAR_ESTIMATORS:
        G = gram(features)
        L = basis_moments(data, spec, features)
        if est.name == "riesz-loss":
            fit = linear.solve_riesz_loss(G, L, l2=est.l2)
        elif est.name == "lasso":
            fit = linear.solve_lasso(G, L, l1=est.l1)
        else:
            fit = linear.solve_rayleigh(G, L, l1=est.l1, l2=est.l2)
        return EstimatorResult(fit.predict(features), fit.objective_value, fit)
    mlp = neural.MlpConfig(
        input_dim=data.observations().shape[1],
        hidden_widths=est.hidden,
        init_seed=est.init_seed + seed_offset,
    )
    train = neural.TrainConfig(learning_rate=est.lr, max_epochs=est.epochs)
    trainer = neural.train_riesz_loss if est.name == "nn-riesz" else neural.train_rayleigh_constrained
    fit = trainer(data, spec, mlp, train)
    return EstimatorResult(neural.predict_alpha(fit, data), fit.final_objective, fit)


@dataclass(frozen=True)
class ExperimentConfig:
    dgp: Union[AteDgpConfig, ShiftDgpConfig]
    basis: FeatureBuilder
    estimators: tuple
    sample_sizes: tuple
    replications: int = 1
    master_seed: int = 0
    output_path: Optional[str] = None
    functional: Optional[str] = None
    outcome_l2: float = 0.0
    record_runtime: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not self.estimators:
            raise ConfigurationError("estimator list is empty")
        if not self.sample_sizes or any(int(n) < 1 for n in self.sample_sizes):
            raise ConfigurationError("sample_sizes must be a nonempty list of positive counts")
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))

    @property
    def functional_spec(self) -> FunctionalSpec:
        if self.functional is not None:
            return FunctionalSpec(self.functional)
        return FunctionalSpec(ATE if isinstance(self.dgp, AteDgpConfig) else SHIFT_MEAN)

    def dataset(self, n: int, replication: int) -> Dataset:
        seed = replication_seed(self.master_seed, replication)
        if isinstance(self.dgp, AteDgpConfig):
            return generate_ate_dgp(replace(self.dgp, n=n, seed=seed))
        return generate_shift_dgp(replace(self.dgp, n_source=n, seed=seed))

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        try:
            dgp_raw = dict(raw.pop("dgp"))
            kind = dgp_raw.pop("kind", "ate")
            if kind == "ate":
                for key in ("propensity_coefs", "outcome_coefs"):
                    if key in dgp_raw:
                        dgp_raw[key] = tuple(dgp_raw[key])
                dgp = AteDgpConfig(**dgp_raw)
            elif kind == "shift":
                dgp = ShiftDgpConfig(**dgp_raw)
            else:
                raise ConfigurationError(f"unknown dgp kind {kind!r}; expected 'ate' or 'shift'")
            basis = raw.pop("basis")
            if isinstance(basis, str):
                basis = FeatureBuilder.parse(basis)
            else:
                basis = FeatureBuilder(**basis)
            estimators = tuple(
                EstimatorSpec(**e) if isinstance(e, dict) else EstimatorSpec(name=e) for e in raw.pop("estimators")
            )
            return cls(dgp=dgp, basis=basis, estimators=estimators, **raw)
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"invalid experiment config: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: {exc}") from None

    def to_dict(self) -> dict:
        dgp = asdict(self.dgp)
        dgp = {"kind": "ate" if isinstance(self.dgp, AteDgpConfig) else "shift", **dgp}
        return {
            "dgp": dgp,
            "basis": str(self.basis) if not self.basis.standardize else asdict(self.basis),
            "estimators": [asdict(e) for e in self.estimators],
            "sample_sizes": list(self.sample_sizes),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "output_path": self.output_path,
            "functional": self.functional,
            "outcome_l2": self.outcome_l2,
            "record_runtime": self.record_runtime,
        }


@dataclass
class ResultRow:
    estimator: str
    n: int
    replication: int
    rr_mse: Optional[float] = None
    weighting_estimate: Optional[float] = None
    dr_estimate: Optional[float] = None
    objective_value: Optional[float] = None
    equivalence_max_rel_diff: Optional[float] = None
    runtime_ms: Optional[float] = None
    error: str = ""


RESULT_FIELDS = tuple(f.name for f in fields(ResultRow))


def _equivalent_pairs(estimators) -> list:
    """Index pairs whose fits should coincide (or be compared) with equal penalties."""
    pairs = []
    for i, a in enumerate(estimators):
        for j, b in enumerate(estimators):
            if a.name == "riesz-loss" and b.name == "rayleigh" and b.l1 == 0 and a.l2 == b.l2:
                pairs.append((i, j))
            if a.name == "lasso" and b.name in ("rayleigh", "rayleigh-l1") and b.l2 == 0 and a.l1 == b.l1:
                pairs.append((i, j))
    return pairs


def run_replication(cfg: ExperimentConfig, n: int, replication: int) -> list:
    """All estimator rows for one (n, replication) cell."""
    data = cfg.dataset(n, replication)
    spec = cfg.functional_spec
    features = build_features(data, cfg.basis)
    h_fit = fit_outcome_model(data, features, cfg.outcome_l2) if data.outcome is not None else None
    seed = replication_seed(cfg.master_seed, replication)
    rows, fits = [], []
    for est in cfg.estimators:
        row = ResultRow(est.display_name, n, replication)
        start = time.perf_counter()
        try:
            result = fit_estimator(data, spec, features, est, seed_offset=seed)
            metrics = plug_in_estimates(data, spec, result.alpha_hat, h_fit, features)
            row.rr_mse = metrics.rr_mse
            row.weighting_estimate = metrics.weighting_estimate
            row.dr_estimate = metrics.dr_estimate
            row.objective_value = result.objective_value
            fits.append(result.fit)
        except (RieszError, np.linalg.LinAlgError, FloatingPointError) as exc:
            log.warning("estimator %s failed at n=%d replication=%d: %s", est.display_name, n, replication, exc)
            row.error = type(exc).__name__
            fits.append(None)
        if cfg.record_runtime:
            row.runtime_ms = 1000.0 * (time.perf_counter() - start)
        rows.append(row)
    for i, j in _equivalent_pairs(cfg.estimators):
        if fits[i] is None or fits[j] is None:
            continue
        diff = linear.equivalence_report(fits[i], fits[j]).max_rel_diff
        for k in (i, j):
            prev = rows[k].equivalence_max_rel_diff
            rows[k].equivalence_max_rel_diff = diff if prev is None else max(prev, diff)
    return rows


def run_experiment(cfg: ExperimentConfig, output_path=None) -> list:
    rows = []
    for n in cfg.sample_sizes:
        cell = [run_replication(cfg, n, r) for r in range(cfg.replications)]
        for k in range(len(cfg.estimators)):
            rows.extend(rep_rows[k] for rep_rows in cell)
    path = output_path or cfg.output_path
    if path is not None:
        write_results(rows, path)
    return rows


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def write_results(rows, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)
        for row in rows:
            writer.writerow([_format(getattr(row, name)) for name in RESULT_FIELDS])


def read_results(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            kwargs = {}
            for name in RESULT_FIELDS:
                value = rec[name]
                if name in ("estimator", "error"):
                    kwargs[name] = value
                elif name in ("n", "replication"):
                    kwargs[name] = int(value)
                else:
                    kwargs[name] = float(value) if value != "" else None
            out.append(ResultRow(**kwargs))
    return out
