"""Sieve feature maps and the empirical Gram matrix.

Column orderings
----------------
``Polynomial(K)``
    All monomials of the covariates with total degree <= K, grouped by degree
    and, within a degree, in ``itertools.combinations_with_replacement`` order.
    The treatment column is never used.
``PolynomialWithTreatment(K)``
    The same monomials ``b_1, b_2, ...`` interleaved with their treatment
    interactions: ``b_1, t*b_1, b_2, t*b_2, ...``.  Degree 1 on a scalar ``w``
    gives ``(1, t, w, t*w)``.
``RandomFourier(count, bandwidth, seed)``
    ``sqrt(2/count) * cos(z @ omega + b)`` where ``z`` is ``[t, w]`` for treated
    data and ``x`` otherwise, ``omega ~ N(0, 1/bandwidth**2)`` and
    ``b ~ U(0, 2*pi)`` drawn from ``default_rng(seed)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError


def _monomial_exponents(p: int, degree: int) -> list:
    terms = []
    for k in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(p), k):
            terms.append(combo)
    return terms


def _monomials(w: NDArray, degree: int) -> NDArray:
    n, p = w.shape
    cols = []
    for combo in _monomial_exponents(p, degree):
        col = np.ones(n)
        for j in combo:
            col = col * w[:, j]
        cols.append(col)
    return np.column_stack(cols)


@dataclass(frozen=True)
class FeatureBuilder:
    """A deterministic feature map ``phi``.

    ``kind`` is one of ``"poly"``, ``"poly-t"``, ``"rff"``.
    """

    kind: str
    degree: int = 1
    count: int = 100
    bandwidth: float = 1.0
    seed: int = 0
    standardize: bool = False
    center: Optional[tuple] = None
    scale: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("poly", "poly-t", "rff"):
            raise ConfigurationError(f"unknown basis kind {self.kind!r}")
        if self.degree < 0:
            raise ConfigurationError("degree must be >= 0")
        if self.count < 1:
            raise ConfigurationError("count must be >= 1")
        if self.bandwidth <= 0:
            raise ConfigurationError("bandwidth must be positive")

    @classmethod
    def polynomial(cls, degree: int) -> "FeatureBuilder":
        return cls("poly", degree=degree)

    @classmethod
    def polynomial_with_treatment(cls, degree: int) -> "FeatureBuilder":
        return cls("poly-t", degree=degree)

    @classmethod
    def random_fourier(cls, count: int, bandwidth: float, seed: int = 0) -> "FeatureBuilder":
        return cls("rff", count=count, bandwidth=bandwidth, seed=seed)

    @classmethod
    def parse(cls, text: str) -> "FeatureBuilder":
        """Parse the command-line form ``poly-t:K``, ``poly:K`` or ``rff:count,bw[,seed]``."""
        try:
            kind, _, arg = text.partition(":")
            if kind in ("poly", "poly-t"):
                return cls(kind, degree=int(arg))
            if kind == "rff":
                parts = arg.split(",")
                seed = int(parts[2]) if len(parts) > 2 else 0
                return cls("rff", count=int(parts[0]), bandwidth=float(parts[1]), seed=seed)
        except (ValueError, IndexError):
            pass
        raise ConfigurationError(f"cannot parse basis {text!r}; expected poly-t:K, poly:K or rff:count,bw")

    def __str__(self) -> str:
        if self.kind == "rff":
            text = f"rff:{self.count},{self.bandwidth},{self.seed}"
        else:
            text = f"{self.kind}:{self.degree}"
        return text + ("+z" if self.standardize else "")

    @property
    def needs_treatment(self) -> bool:
        return self.kind == "poly-t"

    def dimension(self, p: int, has_treatment: bool = False) -> int:
        if self.kind == "rff":
            return self.count
        m = len(_monomial_exponents(p, self.degree))
        return 2 * m if self.kind == "poly-t" else m

    def _rff_params(self, input_dim: int):
        rng = np.random.default_rng(self.seed)
        omega = rng.standard_normal((input_dim, self.count)) / self.bandwidth
        offset = rng.uniform(0.0, 2.0 * np.pi, size=self.count)
        return omega, offset

    def fit(self, data) -> "FeatureBuilder":
        """Freeze z-scoring statistics from ``data`` when ``standardize`` is set.

        Constant columns (zero spread) are left untouched so the intercept survives.
        The returned builder applies the same affine map to any later input,
        including counterfactual arms and target-distribution samples.
        """
        if not self.standardize:
            return self
        raw = replace(self, standardize=False).transform(data.covariates, data.treatment)
        mu = raw.mean(axis=0)
        sd = raw.std(axis=0)
        const = sd < 1e-12
        mu[const] = 0.0
        sd[const] = 1.0
        return replace(self, center=tuple(mu), scale=tuple(sd))

    def transform(self, covariates: NDArray, treatment: Optional[NDArray] = None) -> NDArray:
        """Evaluate ``phi`` row-wise.  ``treatment`` may be a scalar arm value."""
        out = self._raw_transform(covariates, treatment)
        if self.standardize:
            if self.center is None:
                raise ConfigurationError("standardized basis must be fit before use")
            out = (out - np.asarray(self.center)) / np.asarray(self.scale)
        return out

    def _raw_transform(self, covariates, treatment):
        w = np.asarray(covariates, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        n = w.shape[0]
        if treatment is not None:
            treatment = np.broadcast_to(np.asarray(treatment, dtype=float), (n,))
        if self.kind == "poly":
            return _monomials(w, self.degree)
        if self.kind == "poly-t":
            if treatment is None:
                raise ConfigurationError("poly-t basis requires a treatment column")
            base = _monomials(w, self.degree)
            out = np.empty((n, 2 * base.shape[1]))
            out[:, 0::2] = base
            out[:, 1::2] = treatment[:, None] * base
            return out
        z = w if treatment is None else np.column_stack([treatment, w])
        omega, offset = self._rff_params(z.shape[1])
        return np.sqrt(2.0 / self.count) * np.cos(z @ omega + offset)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: NDArray
    builder: Optional[FeatureBuilder] = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: NDArray
    n_used: int

    @property
    def d(self) -> int:
        return self.values.shape[0]


def build_features(data, builder: FeatureBuilder) -> FeatureMatrix:
    """Evaluate ``builder`` on every observation of ``data``.

    A standardized builder that has not been fit is fit on ``data`` first; the
    fitted builder is kept on the returned matrix and must be reused for moments.
    """
    if builder.needs_treatment and data.treatment is None:
        raise ConfigurationError(f"basis {builder} requires treatment, but the dataset has none")
    if builder.standardize and builder.center is None:
        builder = builder.fit(data)
    values = builder.transform(data.covariates, data.treatment)
    values.setflags(write=False)
    return FeatureMatrix(values, builder)


def gram(features) -> GramMatrix:
    """``(1/n) Phi^T Phi``, symmetrized to kill rounding asymmetry."""
    phi = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
    n = phi.shape[0]
    if n < 1:
        raise ConfigurationError("need at least one row")
    g = phi.T @ phi / n
    g = 0.5 * (g + g.T)
    g.setflags(write=False)
    return GramMatrix(g, n)
