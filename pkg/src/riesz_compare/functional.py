"""Linear functionals ``L(h) = E[m(h; X)]`` and their empirical moments.

Both supported functionals are finite signed sums of point evaluations, so
they are stored as a list of evaluation batches ``(covariates, treatment,
weight)``; the empirical functional of ``f`` is ``sum(weight * f(batch))``
over all batches.  ``basis_moments`` and ``function_moment`` share this
representation, and the neural trainers reuse it to backpropagate through
``m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, FunctionalMismatchError

ATE = "ate"
SHIFT_MEAN = "shift-mean"


@dataclass(frozen=True)
class FunctionalSpec:
    """``kind="ate"`` gives ``m(h; x) = h(1, w) - h(0, w)``.

    ``kind="shift-mean"`` gives the mean of ``h`` under the target
    distribution, estimated on the dataset's ``aux_sample``.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in (ATE, SHIFT_MEAN):
            raise ConfigurationError(f"unknown functional {self.kind!r}; expected 'ate' or 'shift-mean'")

    @classmethod
    def ate(cls) -> "FunctionalSpec":
        return cls(ATE)

    @classmethod
    def shift_mean(cls) -> "FunctionalSpec":
        return cls(SHIFT_MEAN)

    def check(self, data) -> None:
        if self.kind == ATE and data.treatment is None:
            raise FunctionalMismatchError("ATE functional needs a treatment column")
        if self.kind == SHIFT_MEAN and data.aux_sample is None:
            raise FunctionalMismatchError("shift-mean functional needs an auxiliary target sample")


class EvalBatch(NamedTuple):
    covariates: NDArray
    treatment: Optional[float]
    weight: float


@dataclass(frozen=True, eq=False)
class MomentVector:
    values: NDArray
    sample_size: int

    @property
    def d(self) -> int:
        return self.values.shape[0]


def evaluation_batches(data, spec: FunctionalSpec) -> list:
    """The point evaluations making up the empirical functional."""
    spec.check(data)
    if spec.kind == ATE:
        w = 1.0 / data.n
        return [EvalBatch(data.covariates, 1.0, w), EvalBatch(data.covariates, 0.0, -w)]
    # Target sample carries no treatment even if the source data does.
    return [EvalBatch(data.aux_sample, None, 1.0 / data.aux_sample.shape[0])]


def moment_sample_size(data, spec: FunctionalSpec) -> int:
    return data.n if spec.kind == ATE else data.aux_sample.shape[0]


def basis_moments(data, spec: FunctionalSpec, features) -> MomentVector:
    """Empirical ``E[m(phi_j; X)]`` for every basis column.

    ``features`` is a ``FeatureBuilder`` or a ``FeatureMatrix`` carrying one
    (the fitted builder is needed when the basis is standardized).
    """
    builder = getattr(features, "builder", None) or features
    total = None
    for cov, t, weight in evaluation_batches(data, spec):
        contrib = weight * builder.transform(cov, t).sum(axis=0)
        total = contrib if total is None else total + contrib
    if not np.all(np.isfinite(total)):
        raise FunctionalMismatchError("non-finite basis moments")
    total.setflags(write=False)
    return MomentVector(total, moment_sample_size(data, spec))


def function_moment(data, spec: FunctionalSpec, f: Callable[[NDArray, Optional[NDArray]], NDArray]) -> float:
    """Empirical ``E[m(f; X)]`` for a black-box ``f(covariates, treatment) -> values``.

    For the ATE functional ``f`` receives scalar arm values 1.0 and 0.0; for
    the shift-mean functional it receives ``treatment=None``.
    """
    total = 0.0
    for cov, t, weight in evaluation_batches(data, spec):
        total += weight * float(np.sum(f(cov, t)))
    return total
