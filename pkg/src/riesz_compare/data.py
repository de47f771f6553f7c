"""Synthetic data-generating processes with known Riesz representers, and CSV I/O.

Two designs are provided:

* ``generate_ate_dgp``: a binary treatment with clipped-logistic propensity.
  The representer of the average treatment effect is the signed inverse
  propensity weight ``t / pi(w) - (1 - t) / (1 - pi(w))``.
* ``generate_shift_dgp``: a unit-variance Gaussian mean shift.  The
  representer of the target-distribution mean is the density ratio
  ``exp(mu * x - mu**2 / 2)``.

Every generator draws from ``numpy.random.default_rng(seed)`` in a fixed order,
so equal configs give bit-identical datasets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, ParseError, SchemaError

RESERVED_COLUMNS = ("t", "y", "alpha0")


def _frozen(a: Optional[NDArray]) -> Optional[NDArray]:
    if a is None:
        return None
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations plus whatever oracle information the generator knows.

    Arrays are copied and made read-only on construction.
    """

    covariates: NDArray
    treatment: Optional[NDArray] = None
    outcome: Optional[NDArray] = None
    aux_sample: Optional[NDArray] = None
    oracle_alpha: Optional[NDArray] = None
    estimand_truth: Optional[float] = None

    def __post_init__(self):
        cov = np.array(self.covariates, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None]
        if cov.ndim != 2 or cov.shape[0] < 1:
            raise ConfigurationError("covariates must be a nonempty 2-D array")
        cov.setflags(write=False)
        object.__setattr__(self, "covariates", cov)
        n, p = cov.shape
        for name in ("treatment", "outcome", "oracle_alpha"):
            v = _frozen(getattr(self, name))
            if v is not None and v.shape != (n,):
                raise ConfigurationError(f"{name} has shape {v.shape}, expected ({n},)")
            object.__setattr__(self, name, v)
        if self.treatment is not None and not np.all((self.treatment == 0) | (self.treatment == 1)):
            raise ConfigurationError("treatment entries must be 0 or 1")
        aux = self.aux_sample
        if aux is not None:
            aux = np.array(aux, dtype=float)
            if aux.ndim == 1:
                aux = aux[:, None]
            if aux.ndim != 2 or aux.shape[1] != p or aux.shape[0] < 1:
                raise ConfigurationError(f"aux_sample must have {p} columns and at least one row")
            aux.setflags(write=False)
            object.__setattr__(self, "aux_sample", aux)
        if self.estimand_truth is not None:
            object.__setattr__(self, "estimand_truth", float(self.estimand_truth))

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def observations(self, treatment: Optional[NDArray] = None) -> NDArray:
        """Raw input matrix for black-box functions: ``[t, w]`` if treated data, else ``x``.

        ``treatment`` overrides the observed arm, which is how counterfactual
        evaluations are built.
        """
        t = self.treatment if treatment is None else np.broadcast_to(treatment, (self.n,))
        if t is None:
            return self.covariates
        return np.column_stack([t, self.covariates])

    def equals(self, other: "Dataset") -> bool:
        """Bitwise equality of every field."""
        for name in ("covariates", "treatment", "outcome", "aux_sample", "oracle_alpha"):
            a, b = getattr(self, name), getattr(other, name)
            if (a is None) != (b is None):
                return False
            if a is not None and (a.shape != b.shape or a.tobytes() != b.tobytes()):
                return False
        return self.estimand_truth == other.estimand_truth


@dataclass(frozen=True)
class AteDgpConfig:
    n: int = 1000
    p: int = 3
    tau: float = 1.0
    propensity_coefs: tuple = (1.0, -0.75, 0.5)
    propensity_clip: float = 0.05
    outcome_coefs: tuple = (1.0, 0.5, -0.5)
    noise_sd: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ConfigurationError("n and p must be positive")
        if len(self.propensity_coefs) != self.p:
            raise ConfigurationError(f"propensity_coefs has length {len(self.propensity_coefs)}, expected p={self.p}")
        if len(self.outcome_coefs) != self.p:
            raise ConfigurationError(f"outcome_coefs has length {len(self.outcome_coefs)}, expected p={self.p}")
        if not 0.0 < self.propensity_clip < 0.5:
            raise ConfigurationError("propensity_clip must lie in (0, 0.5)")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be nonnegative")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")


@dataclass(frozen=True)
class ShiftDgpConfig:
    n_source: int = 1000
    n_target: int = 1000
    mean_shift: float = 1.0
    seed: int = 0
    noise_sd: float = 1.0

    def validate(self) -> None:
        if self.n_source < 1 or self.n_target < 1:
            raise ConfigurationError("n_source and n_target must be at least 1")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be nonnegative")
        if self.seed < 0:
            raise ConfigurationError("seed must be nonnegative")


def propensity(w: NDArray, coefs: Sequence[float], clip: float) -> NDArray:
    """Clipped logistic propensity score."""
    index = np.asarray(w, dtype=float) @ np.asarray(coefs, dtype=float)
    return np.clip(1.0 / (1.0 + np.exp(-index)), clip, 1.0 - clip)


def ipw_representer(t: NDArray, pi: NDArray) -> NDArray:
    return t / pi - (1.0 - t) / (1.0 - pi)


def density_ratio(x: NDArray, mean_shift: float) -> NDArray:
    """dQ/dP for Q = N(mu, 1), P = N(0, 1)."""
    return np.exp(mean_shift * np.asarray(x, dtype=float) - 0.5 * mean_shift**2)


def generate_ate_dgp(cfg: AteDgpConfig) -> Dataset:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    w = rng.uniform(-1.0, 1.0, size=(cfg.n, cfg.p))
    pi = propensity(w, cfg.propensity_coefs, cfg.propensity_clip)
    t = (rng.uniform(size=cfg.n) < pi).astype(float)
    noise = rng.standard_normal(cfg.n)
    y = cfg.tau * t + w @ np.asarray(cfg.outcome_coefs, dtype=float) + cfg.noise_sd * noise
    return Dataset(
        covariates=w,
        treatment=t,
        outcome=y,
        oracle_alpha=ipw_representer(t, pi),
        estimand_truth=cfg.tau,
    )


def generate_shift_dgp(cfg: ShiftDgpConfig) -> Dataset:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    x = rng.standard_normal(cfg.n_source)
    aux = cfg.mean_shift + rng.standard_normal(cfg.n_target)
    y = x**2 + cfg.noise_sd * rng.standard_normal(cfg.n_source)
    return Dataset(
        covariates=x[:, None],
        outcome=y,
        aux_sample=aux[:, None],
        oracle_alpha=density_ratio(x, cfg.mean_shift),
        estimand_truth=cfg.mean_shift**2 + 1.0,
    )


def replication_seed(master_seed: int, replication: int) -> int:
    return master_seed + replication


# --- CSV -----------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for ``load_dataset_csv``.

    ``covariates=None`` means every column not claimed by another field.
    A field set to ``None`` is left absent in the resulting dataset.
    """

    covariates: Optional[tuple] = None
    treatment: Optional[str] = None
    outcome: Optional[str] = None
    oracle_alpha: Optional[str] = None

    @classmethod
    def infer(cls, header: Sequence[str]) -> "CsvSchema":
        """Use ``t``, ``y`` and ``alpha0`` when present; everything else is a covariate."""
        return cls(
            treatment="t" if "t" in header else None,
            outcome="y" if "y" in header else None,
            oracle_alpha="alpha0" if "alpha0" in header else None,
        )

    def covariate_columns(self, header: Sequence[str]) -> list:
        if self.covariates is not None:
            return list(self.covariates)
        taken = {self.treatment, self.outcome, self.oracle_alpha}
        return [c for c in header if c not in taken]


def _read_numeric_csv(path: Path) -> tuple:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigurationError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    return header, rows


def _column(header, rows, name) -> NDArray:
    if name not in header:
        raise SchemaError(name)
    j = header.index(name)
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        cell = row[j].strip() if j < len(row) else ""
        try:
            out[i] = float(cell)
        except ValueError:
            raise ParseError(i, name, cell) from None
    return out


def load_dataset_csv(path, schema: Optional[CsvSchema] = None, aux_path=None) -> Dataset:
    """Read a comma-separated file with a header row into a Dataset.

    Row indices in parse errors count data rows from 0 (the header is not counted).
    ``aux_path``, if given, holds target-distribution draws with the same
    covariate columns.
    """
    path = Path(path)
    header, rows = _read_numeric_csv(path)
    if schema is None:
        schema = CsvSchema.infer(header)
    cov_cols = schema.covariate_columns(header)
    if not cov_cols:
        raise ConfigurationError(f"{path}: no covariate columns")
    covariates = np.column_stack([_column(header, rows, c) for c in cov_cols])
    fields = {}
    for name in ("treatment", "outcome", "oracle_alpha"):
        col = getattr(schema, name)
        if col is not None:
            fields[name] = _column(header, rows, col)
    aux = None
    if aux_path is not None:
        aux_header, aux_rows = _read_numeric_csv(Path(aux_path))
        aux = np.column_stack([_column(aux_header, aux_rows, c) for c in cov_cols])
    return Dataset(covariates=covariates, aux_sample=aux, **fields)


def covariate_names(p: int) -> list:
    return [f"w{j + 1}" for j in range(p)]


def write_dataset_csv(data: Dataset, path, aux_path=None) -> None:
    """Inverse of ``load_dataset_csv`` with the default column names."""
    names = covariate_names(data.p)
    cols = [data.covariates[:, j] for j in range(data.p)]
    for label, v in (("t", data.treatment), ("y", data.outcome), ("alpha0", data.oracle_alpha)):
        if v is not None:
            names.append(label)
            cols.append(v)
    _write_matrix(path, names, np.column_stack(cols))
    if aux_path is not None and data.aux_sample is not None:
        _write_matrix(aux_path, covariate_names(data.p), data.aux_sample)


def _write_matrix(path, header, matrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])
