"""Accuracy against oracle representers and downstream estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .basis import gram
from .errors import ConfigurationError, ShapeError
from .functional import basis_moments


@dataclass(frozen=True)
class MetricsReport:
    rr_mse: Optional[float]
    weighting_estimate: float
    dr_estimate: Optional[float]
    estimand_truth: Optional[float]
    n_eval: int


@dataclass(frozen=True, eq=False)
class OutcomeFit:
    theta_h: NDArray
    l2: float

    def predict(self, features) -> NDArray:
        return np.asarray(getattr(features, "values", features)) @ self.theta_h


def rr_mse(predicted, oracle) -> float:
    predicted = np.asarray(predicted, dtype=float)
    oracle = np.asarray(oracle, dtype=float)
    if predicted.shape != oracle.shape or predicted.ndim != 1 or predicted.size < 1:
        raise ShapeError(f"cannot compare arrays of shape {predicted.shape} and {oracle.shape}")
    return float(np.mean((predicted - oracle) ** 2))


def fit_outcome_model(data, features, l2: float = 0.0) -> OutcomeFit:
    """Ridge regression of Y on the sieve, ``(G + l2 I)^{-1} Phi'Y / n``.

    Unpenalized singular designs get the minimum-norm least-squares solution.
    """
    if data.outcome is None:
        raise ConfigurationError("outcome model needs an outcome column")
    phi = features.values
    n = phi.shape[0]
    G = gram(features).values
    rhs = phi.T @ data.outcome / n
    if l2 > 0:
        theta = np.linalg.solve(G + l2 * np.eye(G.shape[0]), rhs)
    else:
        theta = np.linalg.lstsq(phi, data.outcome, rcond=None)[0]
    return OutcomeFit(theta, float(l2))


def plug_in_estimates(data, spec, alpha_hat, h_fit: Optional[OutcomeFit] = None, features=None) -> MetricsReport:
    """Weighting estimate ``E_n[alpha Y]`` and, given ``h_fit``, the doubly-robust form

    ``E_n[m(h)] + E_n[alpha (Y - h)]``.
    """
    if data.outcome is None:
        raise ConfigurationError("estimates need an outcome column")
    alpha_hat = np.asarray(alpha_hat, dtype=float)
    if alpha_hat.shape != (data.n,):
        raise ShapeError(f"alpha_hat has shape {alpha_hat.shape}, expected ({data.n},)")
    y = data.outcome
    weighting = float(np.mean(alpha_hat * y))
    dr = None
    if h_fit is not None:
        if features is None:
            raise ConfigurationError("doubly-robust estimate needs the feature matrix")
        plug_in = float(basis_moments(data, spec, features).values @ h_fit.theta_h)
        dr = plug_in + float(np.mean(alpha_hat * (y - h_fit.predict(features))))
    mse = rr_mse(alpha_hat, data.oracle_alpha) if data.oracle_alpha is not None else None
    return MetricsReport(mse, weighting, dr, data.estimand_truth, data.n)
