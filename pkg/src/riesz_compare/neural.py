"""Small tanh MLP with two full-batch trainers for the Riesz representer.

``train_riesz_loss`` minimizes the empirical Riesz loss
``E_n[f(X)^2] - 2 E_n[m(f; X)]``.

``train_rayleigh_constrained`` maximizes ``E_n[m(f~; X)]^2`` where
``f~ = f / sqrt(E_n[f^2] + eps)`` is the network normalized to unit empirical
second moment; gradients flow through the normalization, so every iterate is
feasible.  The representer is recovered as ``c * f~`` with ``c = E_n[m(f~)]``.

Backpropagation is written out by hand in numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from .errors import DegenerateNetworkError, DivergenceError, ShapeError
from .functional import evaluation_batches

RIESZ_LOSS = "riesz-loss"
CONSTRAINED_RAYLEIGH = "constrained-rayleigh"

Params = List[Tuple[NDArray, NDArray]]


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    hidden_widths: Tuple[int, ...] = (32, 32)
    activation: str = "tanh"
    init_seed: int = 0
    output_init_scale: float = 0.1

    def __post_init__(self):
        if self.input_dim < 1 or any(w < 1 for w in self.hidden_widths):
            raise ShapeError("input_dim and hidden widths must be >= 1")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    max_epochs: int = 2000
    tol: float = 1e-9
    tol_window: int = 20
    norm_epsilon: float = 1e-8

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.max_epochs > 0 and self.tol > 0 and self.norm_epsilon > 0):
            raise ValueError("training hyperparameters must be positive")


def init_params(cfg: MlpConfig) -> Params:
    """LeCun-normal weights, zero biases; the output layer is shrunk by ``output_init_scale``."""
    rng = np.random.default_rng(cfg.init_seed)
    sizes = (cfg.input_dim, *cfg.hidden_widths, 1)
    params = [
        (rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in), np.zeros(fan_out))
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
    ]
    W, b = params[-1]
    params[-1] = (cfg.output_init_scale * W, b)
    return params


def forward(params: Params, x: NDArray):
    """Network output (length n) plus the hidden activations needed for backprop."""
    acts = [x]
    h = x
    for W, b in params[:-1]:
        h = np.tanh(h @ W + b)
        acts.append(h)
    W, b = params[-1]
    return (h @ W + b)[:, 0], acts


def backward(params: Params, acts: list, dy: NDArray) -> Params:
    """Gradient of ``sum(dy * f(x))`` with respect to every weight and bias."""
    grads = [None] * len(params)
    delta = dy[:, None]
    for k in range(len(params) - 1, -1, -1):
        W, _ = params[k]
        h_in = acts[k]
        grads[k] = (h_in.T @ delta, delta.sum(axis=0))
        if k > 0:
            # acts[k] = tanh(z_k); tanh' = 1 - tanh^2
            delta = (delta @ W.T) * (1.0 - h_in**2)
    return grads


def _axpy(params: Params, grads: Params, step: float) -> Params:
    return [(W + step * gW, b + step * gb) for (W, b), (gW, gb) in zip(params, grads)]


def _accumulate(total: Optional[Params], grads: Params) -> Params:
    if total is None:
        return grads
    return [(a + c, b + d) for (a, b), (c, d) in zip(total, grads)]


@dataclass(frozen=True, eq=False)
class Problem:
    """Network inputs for the sample second moment and the functional."""

    observed: NDArray
    moment_batches: Tuple[Tuple[NDArray, float], ...]

    @classmethod
    def from_data(cls, data, spec) -> "Problem":
        batches = []
        for cov, t, weight in evaluation_batches(data, spec):
            z = cov if t is None else np.column_stack([np.full(cov.shape[0], t), cov])
            batches.append((z, weight))
        obs = data.observations()
        for z, _ in batches:
            if z.shape[1] != obs.shape[1]:
                raise ShapeError("functional evaluation points and observations have different widths")
        return cls(obs, tuple(batches))

    @property
    def input_dim(self) -> int:
        return self.observed.shape[1]


def _moment_and_grad(params: Params, problem: Problem, scale: float):
    """``M = E_n[m(f)]`` and the gradient of ``scale * M``."""
    total, grads = 0.0, None
    for z, weight in problem.moment_batches:
        f, acts = forward(params, z)
        total += weight * f.sum()
        grads = _accumulate(grads, backward(params, acts, np.full(f.shape, scale * weight)))
    return total, grads


def riesz_loss_and_grad(params: Params, problem: Problem):
    f, acts = forward(params, problem.observed)
    n = f.shape[0]
    second = float(f @ f) / n
    g_sq = backward(params, acts, 2.0 * f / n)
    moment, g_m = _moment_and_grad(params, problem, -2.0)
    return second - 2.0 * moment, _accumulate(g_sq, g_m)


def rayleigh_objective_and_grad(params: Params, problem: Problem, eps: float = 1e-8):
    """``E_n[m(f~)]^2 = M^2 / (s + eps)`` and its gradient, ``s = E_n[f^2]``."""
    f, acts = forward(params, problem.observed)
    n = f.shape[0]
    denom = float(f @ f) / n + eps
    moment, _ = _moment_and_grad(params, problem, 0.0)
    value = moment**2 / denom
    g_sq = backward(params, acts, -(moment**2) / denom**2 * 2.0 * f / n)
    _, g_m = _moment_and_grad(params, problem, 2.0 * moment / denom)
    return value, _accumulate(g_sq, g_m)


def riesz_loss(params: Params, problem: Problem) -> float:
    return riesz_loss_and_grad(params, problem)[0]


def rayleigh_objective(params: Params, problem: Problem, eps: float = 1e-8) -> float:
    f, _ = forward(params, problem.observed)
    moment, _ = _moment_and_grad(params, problem, 0.0)
    return moment**2 / (float(f @ f) / f.shape[0] + eps)


def normalization_constant(params: Params, problem: Problem, eps: float) -> float:
    f, _ = forward(params, problem.observed)
    return float(np.sqrt(f @ f / f.shape[0] + eps))


def rayleigh_scale(params: Params, problem: Problem, eps: float) -> Tuple[float, float]:
    """``(c, norm)`` with ``f~ = f / norm`` and ``c = E_n[m(f~)]``."""
    norm = normalization_constant(params, problem, eps)
    moment, _ = _moment_and_grad(params, problem, 0.0)
    return moment / norm, norm


@dataclass(frozen=True, eq=False)
class NeuralRieszFit:
    params: Params
    trainer: str
    scale_c: float
    final_objective: float
    epochs_run: int
    mlp: MlpConfig
    train: TrainConfig
    initial_objective: float = float("nan")
    norm_const: float = 1.0
    history: Tuple[float, ...] = field(default=(), repr=False)

    def function(self):
        """The fitted representer as ``f(covariates, treatment)``, usable with ``function_moment``."""

        def alpha(cov, t=None):
            z = cov if t is None else np.column_stack([np.broadcast_to(t, (cov.shape[0],)), cov])
            return self._from_raw(forward(self.params, z)[0])

        return alpha

    def _from_raw(self, f: NDArray) -> NDArray:
        if self.trainer == RIESZ_LOSS:
            return f
        return self.scale_c * f / self.norm_const

    def to_dict(self) -> dict:
        return {
            "trainer": self.trainer,
            "scale_c": self.scale_c,
            "norm_const": self.norm_const,
            "final_objective": self.final_objective,
            "initial_objective": self.initial_objective,
            "epochs_run": self.epochs_run,
            "hidden_widths": list(self.mlp.hidden_widths),
            "input_dim": self.mlp.input_dim,
            "init_seed": self.mlp.init_seed,
            "learning_rate": self.train.learning_rate,
            "max_epochs": self.train.max_epochs,
            "norm_epsilon": self.train.norm_epsilon,
            "params": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params],
        }


def _gradient_loop(params, objective_and_grad, train: TrainConfig, sign: float):
    """Full-batch gradient steps; ``sign=-1`` descends, ``+1`` ascends."""
    history = []
    epoch = 0
    for epoch in range(1, train.max_epochs + 1):
        value, grads = objective_and_grad(params)
        if not np.isfinite(value):
            raise DivergenceError(epoch)
        history.append(value)
        params = _axpy(params, grads, sign * train.learning_rate)
        k = train.tol_window
        if len(history) > k and abs(history[-1] - history[-1 - k]) < train.tol:
            break
    return params, epoch, history


def predict_alpha(fit: NeuralRieszFit, data) -> NDArray:
    x = data.observations()
    if x.shape[1] != fit.mlp.input_dim:
        raise ShapeError(f"network expects {fit.mlp.input_dim} inputs, data has {x.shape[1]}")
    return fit._from_raw(forward(fit.params, x)[0])


def _check_mlp(mlp: MlpConfig, problem: Problem) -> None:
    if mlp.input_dim != problem.input_dim:
        raise ShapeError(f"network expects {mlp.input_dim} inputs, data has {problem.input_dim}")


def train_riesz_loss(data, spec, mlp: MlpConfig, train: TrainConfig = TrainConfig()) -> NeuralRieszFit:
    problem = Problem.from_data(data, spec)
    _check_mlp(mlp, problem)
    params = init_params(mlp)
    initial = riesz_loss(params, problem)
    params, epochs, history = _gradient_loop(params, lambda p: riesz_loss_and_grad(p, problem), train, -1.0)
    final = riesz_loss(params, problem)
    if not np.isfinite(final):
        raise DivergenceError(epochs)
    return NeuralRieszFit(params, RIESZ_LOSS, 1.0, final, epochs, mlp, train, initial, 1.0, tuple(history))


def train_rayleigh_constrained(data, spec, mlp: MlpConfig, train: TrainConfig = TrainConfig()) -> NeuralRieszFit:
    problem = Problem.from_data(data, spec)
    _check_mlp(mlp, problem)
    eps = train.norm_epsilon
    params = init_params(mlp)
    f0, _ = forward(params, problem.observed)
    if f0 @ f0 / f0.shape[0] < eps:
        raise DegenerateNetworkError(
            f"initial network has E_n[f^2] below {eps}; reinitialize with another init_seed"
        )
    initial = rayleigh_objective(params, problem, eps)
    params, epochs, history = _gradient_loop(
        params, lambda p: rayleigh_objective_and_grad(p, problem, eps), train, 1.0
    )
    final = rayleigh_objective(params, problem, eps)
    if not np.isfinite(final):
        raise DivergenceError(epochs)
    c, norm = rayleigh_scale(params, problem, eps)
    return NeuralRieszFit(params, CONSTRAINED_RAYLEIGH, c, final, epochs, mlp, train, initial, norm, tuple(history))


def normalized_second_moment(fit: NeuralRieszFit, data) -> float:
    """``E_n[f~^2]`` on ``data`` using the normalization frozen at training time."""
    f, _ = forward(fit.params, data.observations())
    return float(np.mean((f / fit.norm_const) ** 2))


def scaled_params(params: Params, factor: float) -> Params:
    """Parameters of ``factor * f`` (scales the output layer only)."""
    out = list(params)
    W, b = out[-1]
    out[-1] = (factor * W, factor * b)
    return out
