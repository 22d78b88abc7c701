"""Linear support vector ranker trained by gradient descent on a smoothed hinge."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import InvalidInput


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_iterations: int = 500
    cost_tolerance: float = 1e-6
    l2_penalty: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInput("learning_rate must be > 0")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")
        if not self.cost_tolerance > 0:
            raise InvalidInput("cost_tolerance must be > 0")
        if self.l2_penalty < 0:
            raise InvalidInput("l2_penalty must be >= 0")


@dataclass(frozen=True)
class RankerWeights:
    w: np.ndarray
    trained_iterations: int = 0
    final_cost: float = float("nan")
    diverged: bool = False

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise InvalidInput("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "iterations": int(self.trained_iterations),
                "final_cost": float(self.final_cost)}

    @classmethod
    def from_dict(cls, d: dict) -> "RankerWeights":
        return cls(np.asarray(d["w"], dtype=float), int(d.get("iterations", 0)),
                   float(d.get("final_cost", float("nan"))))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def smooth_hinge(margin):
    """Rennie's smooth hinge and its derivative; works on scalars and arrays.

    loss = 0 for m >= 1, (1 - m)^2 / 2 on (0, 1), 0.5 - m for m <= 0.
    """
    m = np.asarray(margin, dtype=float)
    loss = np.where(m >= 1, 0.0, np.where(m > 0, 0.5 * (1 - m) ** 2, 0.5 - m))
    deriv = np.where(m >= 1, 0.0, np.where(m > 0, m - 1.0, -1.0))
    if loss.ndim == 0:
        return float(loss), float(deriv)
    return loss, deriv


def _weights_vec(w) -> np.ndarray:
    return w.w if isinstance(w, RankerWeights) else np.asarray(w, dtype=float)


def _check_weights(diffs, weight_pos, weight_neg):
    weight_pos = np.asarray(weight_pos, dtype=float)
    weight_neg = np.asarray(weight_neg, dtype=float)
    if weight_pos.shape != (diffs.shape[0],) or weight_neg.shape != (diffs.shape[0],):
        raise InvalidInput("weight arrays must have one entry per pair")
    if not (np.all(np.isfinite(weight_pos)) and np.all(np.isfinite(weight_neg))):
        raise InvalidInput("pair weights must be finite")
    return weight_pos, weight_neg


def cost_and_gradient(w, diffs, weight_pos, weight_neg, l2_penalty=0.0):
    """Weighted smooth-hinge cost summed over pairs, with its gradient in w.

    Each pair contributes weight_pos * h(<w, d>) + weight_neg * h(-<w, d>).
    """
    w = _weights_vec(w)
    m = diffs @ w
    loss_p, dp = smooth_hinge(m)
    loss_n, dn = smooth_hinge(-m)
    cost = float(weight_pos @ loss_p + weight_neg @ loss_n)
    # d/dw of h(-m) is -h'(-m) d
    coef = weight_pos * dp - weight_neg * dn
    grad = diffs.T @ coef
    if l2_penalty:
        cost += 0.5 * l2_penalty * float(w @ w)
        grad = grad + l2_penalty * w
    return cost, grad


def weighted_pair_cost(w, diffs, weight_pos, weight_neg, l2_penalty=0.0) -> float:
    diffs = np.asarray(diffs, dtype=float)
    weight_pos, weight_neg = _check_weights(diffs, weight_pos, weight_neg)
    return cost_and_gradient(w, diffs, weight_pos, weight_neg, l2_penalty)[0]


MAX_HALVINGS = 20


def train_ranker(diffs, weight_pos, weight_neg, config: TrainConfig = TrainConfig(),
                 init=None) -> RankerWeights:
    """Full-batch gradient descent with step halving.

    A step that raises the cost is retried at half the step size, at most
    ``MAX_HALVINGS`` times; the reduced step carries over to later
    iterations. If no halving helps, training stops with ``diverged=True``.
    """
    diffs = np.asarray(diffs, dtype=float)
    if diffs.ndim != 2 or diffs.shape[0] < 1:
        raise InvalidInput("need at least one pair difference")
    weight_pos, weight_neg = _check_weights(diffs, weight_pos, weight_neg)
    w = np.zeros(diffs.shape[1]) if init is None else _weights_vec(init).copy()
    if w.shape != (diffs.shape[1],):
        raise InvalidInput("initial weights have the wrong dimension")

    lam = config.l2_penalty
    cost, grad = cost_and_gradient(w, diffs, weight_pos, weight_neg, lam)
    step = config.learning_rate
    iterations = 0
    diverged = False
    while iterations < config.max_iterations:
        if not np.any(grad):
            break
        for _ in range(MAX_HALVINGS + 1):
            w_new = w - step * grad
            cost_new, grad_new = cost_and_gradient(w_new, diffs, weight_pos, weight_neg, lam)
            if cost_new <= cost:
                break
            step *= 0.5
        else:
            diverged = True
            break
        iterations += 1
        delta = cost - cost_new
        w, cost, grad = w_new, cost_new, grad_new
        if delta < config.cost_tolerance:
            break
    return RankerWeights(w, iterations, cost, diverged)


def score(w, x) -> float:
    w = _weights_vec(w)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != w.shape[0]:
        raise InvalidInput(f"dimension mismatch: weights {w.shape[0]}, input {x.shape[-1]}")
    out = x @ w
    return float(out) if np.ndim(out) == 0 else out


def pairwise_predictions(w, diffs) -> np.ndarray:
    """1 where the ranker puts item i above item j."""
    return (np.asarray(diffs) @ _weights_vec(w) > 0).astype(np.uint8)
