"""Loss, optimizer, gradient clipping, epoch loop, and grid search.

The training criterion is the negative log-likelihood of the binary
piano-roll frames: per valid timestep, the binary cross-entropies of the
88 notes are summed, then averaged over valid timesteps, so reported
values are per-timestep NLLs (a uniform-0.5 predictor scores 88 ln 2,
about 61.0). Optimization is bias-corrected Adam with global-norm
gradient clipping at 5.0.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Batch, to_batches
from .errors import TrainingError
from .model import SequenceModel

__all__ = [
    "PROB_CLAMP",
    "TrainConfig",
    "AdamState",
    "bce_nll",
    "bce_grad_logits",
    "clip_global_norm",
    "adam_update",
    "train_model",
    "grid_search",
    "TrainResult",
]

PROB_CLAMP = 1e-7


@dataclass
class TrainConfig:
    """Optimization protocol: grids, clipping, stopping, reproducibility."""

    learning_rates: tuple = (1e-2, 5e-3, 1e-3)
    dropouts: tuple = (0.2, 0.3, 0.4, 0.5)
    clip_norm: float = 5.0
    max_epochs: int = 200
    patience: int = 10
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rates or not self.dropouts:
            raise ValueError("learning-rate and dropout grids must be non-empty")
        if self.clip_norm <= 0:
            raise ValueError(f"clip threshold must be positive, got {self.clip_norm}")


def bce_nll(predictions: np.ndarray, targets: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Mean per-timestep NLL: sum of per-note binary cross-entropies.

    Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs.
    ``predictions``/``targets`` are (..., T, 88); ``mask`` (..., T) marks
    valid timesteps (all valid when omitted).
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"predictions {p.shape} vs targets {y.shape}")
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    per_step = -(y * np.log(p) + (1.0 - y) * np.log1p(-p)).sum(axis=-1)
    if mask is None:
        return float(per_step.mean())
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != per_step.shape:
        raise ValueError(f"mask {mask.shape} does not match timesteps {per_step.shape}")
    total = mask.sum()
    if total == 0:
        return 0.0
    return float((per_step * mask).sum() / total)


def bce_grad_logits(predictions, targets, mask) -> np.ndarray:
    """Gradient of bce_nll with respect to pre-sigmoid logits: (p - y) / T_valid."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    total = mask.sum()
    if total == 0:
        return np.zeros_like(p)
    return (p - y) * mask[..., None] / total


def clip_global_norm(grads: dict[str, np.ndarray], threshold: float = 5.0):
    """Scale all gradients by threshold/norm when the global L2 norm exceeds it.

    Returns (clipped_grads, global_norm). Non-finite gradients raise
    TrainingError so callers can mark the run as diverged.
    """
    if threshold <= 0:
        raise ValueError(f"clip threshold must be positive, got {threshold}")
    sq = 0.0
    for g in grads.values():
        sq += float(np.dot(g.ravel(), g.ravel()))
    if not np.isfinite(sq):
        raise TrainingError("non-finite gradient norm")
    norm = float(np.sqrt(sq))
    if norm <= threshold:
        return grads, norm
    scale = threshold / norm
    return {k: g * scale for k, g in grads.items()}, norm


@dataclass
class AdamState:
    """First/second-moment accumulators keyed like the parameter dict."""

    alpha: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], alpha: float) -> "AdamState":
        state = cls(alpha=alpha)
        state.m = {k: np.zeros_like(a) for k, a in params.items()}
        state.v = {k: np.zeros_like(a) for k, a in params.items()}
        return state


def adam_update(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
    """One bias-corrected Adam step, in place on the parameter arrays."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for k, p in params.items():
        g = grads[k]
        m = state.m[k]
        v = state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.alpha * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


@dataclass
class TrainResult:
    lr: float
    dropout: float
    history: list  # (epoch, train_nll, valid_nll)
    train_nll: float
    valid_nll: float
    epochs: int
    diverged: bool
    wall_time_s: float
    best_params: dict | None = None


def _eval_nll(model: SequenceModel, batches: list[Batch]) -> float:
    total, steps = 0.0, 0.0
    for batch in batches:
        probs, _ = model.forward(batch.inputs, train=False)
        n = batch.mask.sum()
        total += bce_nll(probs, batch.targets, batch.mask) * n
        steps += n
    return total / steps if steps else 0.0


def train_model(
    model: SequenceModel,
    train_split,
    valid_split,
    config: TrainConfig,
    lr: float,
    dropout: float,
    log=None,
) -> TrainResult:
    """Adam + clipping epoch loop with early stopping on validation NLL.

    The model is left holding the best-validation parameters. Divergence
    (non-finite loss or gradients) stops the run and flags the result
    instead of raising.
    """
    t0 = time.perf_counter()
    params = model.parameters()
    adam = AdamState.for_params(params, alpha=lr)
    valid_batches = to_batches(valid_split, config.batch_size, seed=None)
    rng = np.random.default_rng(np.random.SeedSequence((config.seed, 0xD0)))

    best_valid = np.inf
    best_train = float("nan")
    best_params = {k: a.copy() for k, a in params.items()}
    best_epoch = 0
    history = []
    diverged = False

    for epoch in range(1, config.max_epochs + 1):
        batches = to_batches(train_split, config.batch_size, seed=config.seed + epoch)
        total, steps = 0.0, 0.0
        try:
            for batch in batches:
                probs, caches = model.forward(batch.inputs, dropout_p=dropout, rng=rng, train=True)
                loss = bce_nll(probs, batch.targets, batch.mask)
                if not np.isfinite(loss):
                    raise TrainingError(f"non-finite loss at epoch {epoch}")
                dlogits = bce_grad_logits(probs, batch.targets, batch.mask)
                grads = model.backward(caches, dlogits)
                grads, _ = clip_global_norm(grads, config.clip_norm)
                adam_update(adam, params, grads)
                n = batch.mask.sum()
                total += loss * n
                steps += n
        except TrainingError:
            diverged = True
            history.append((epoch, float("nan"), float("nan")))
            break
        train_nll = total / steps if steps else 0.0
        valid_nll = _eval_nll(model, valid_batches)
        history.append((epoch, float(train_nll), float(valid_nll)))
        if log is not None:
            log(f"epoch {epoch:3d}  train {train_nll:8.4f}  valid {valid_nll:8.4f}")
        if valid_nll < best_valid - 1e-12:
            best_valid = valid_nll
            best_train = float(train_nll)
            best_epoch = epoch
            best_params = {k: a.copy() for k, a in params.items()}
        elif epoch - best_epoch >= config.patience:
            break

    for k, a in params.items():
        a[...] = best_params[k]
    return TrainResult(
        lr=lr,
        dropout=dropout,
        history=history,
        train_nll=best_train,
        valid_nll=float(best_valid) if np.isfinite(best_valid) else float("nan"),
        epochs=len(history),
        diverged=diverged,
        wall_time_s=time.perf_counter() - t0,
    )


def grid_search(
    model_factory,
    train_split,
    valid_split,
    config: TrainConfig,
    trainer=train_model,
    log=None,
):
    """Train one model per (learning rate, dropout) cell; keep the best.

    ``model_factory(seed)`` builds a fresh model; cells are seeded
    deterministically from the config seed. Returns (best_model,
    results) where results holds one TrainResult per cell in grid order;
    diverged cells stay in the list but cannot be selected.
    """
    results: list[TrainResult] = []
    best = None
    best_model = None
    for i, lr in enumerate(config.learning_rates):
        for j, dropout in enumerate(config.dropouts):
            cell_seed = int(np.random.SeedSequence((config.seed, i, j)).generate_state(1)[0])
            model = model_factory(cell_seed)
            if log is not None:
                log(f"grid cell lr={lr} dropout={dropout} seed={cell_seed}")
            result = trainer(model, train_split, valid_split, config, lr, dropout, log=log)
            results.append(result)
            if not result.diverged and np.isfinite(result.valid_nll):
                if best is None or result.valid_nll < best.valid_nll:
                    best = result
                    best_model = model
    if best_model is None:
        raise TrainingError("every grid cell diverged")
    return best_model, results
