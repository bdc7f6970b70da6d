"""Piano-roll sequence model: input projection, compressed GRU, note readout.

Each 88-dimensional binary frame is projected to the cell input size by a
dense layer with LeakyReLU, run through a GRU whose six projections may be
dense, CP, Tucker, or tensor-train operators, and decoded back to 88
per-note probabilities by a dense sigmoid layer. Inverted dropout, when
active, multiplies the projected cell input only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .cells import GRUCell, cell_from_payload, cell_to_payload, gru_step, gru_step_backward
from .errors import ConfigError, DataError
from .factorized import (
    FactorizedLinear,
    TensorizedShape,
    init_factorized,
    operator_from_payload,
    operator_to_payload,
)

NUM_NOTES = 88

__all__ = ["NUM_NOTES", "ModelSpec", "SequenceModel", "build_model", "save_model", "load_model"]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description; everything needed to rebuild the layout."""

    model_kind: str  # dense | cp | tucker | tt
    input_size: int
    hidden_size: int
    m_dims: tuple = ()
    n_dims_input: tuple = ()
    n_dims_hidden: tuple = ()
    ranks: tuple = ()
    leaky_slope: float = 0.01
    dropout_placement: str = "input"

    def __post_init__(self):
        if self.model_kind not in ("dense", "cp", "tucker", "tt"):
            raise ConfigError(f"unknown model kind {self.model_kind!r}")
        if self.dropout_placement not in ("input", "state"):
            raise ConfigError(f"unknown dropout placement {self.dropout_placement!r}")
        if self.model_kind != "dense":
            for dims, size, what in (
                (self.m_dims, self.hidden_size, "m_dims"),
                (self.n_dims_input, self.input_size, "n_dims_input"),
                (self.n_dims_hidden, self.hidden_size, "n_dims_hidden"),
            ):
                if int(np.prod(dims)) != size:
                    raise ConfigError(
                        f"{what} {tuple(dims)} has product {int(np.prod(dims))}, "
                        f"expected {size}"
                    )


@dataclass
class SequenceModel:
    spec: ModelSpec
    proj: FactorizedLinear  # 88 -> input_size, dense, with bias
    cell: GRUCell
    readout: FactorizedLinear  # hidden_size -> 88, dense, with bias

    def param_arrays(self):
        out = [(f"proj.{n}", a) for n, a in self.proj.param_arrays()]
        out += [(f"cell.{n}", a) for n, a in self.cell.param_arrays()]
        out += [(f"readout.{n}", a) for n, a in self.readout.param_arrays()]
        return out

    def parameters(self) -> dict[str, np.ndarray]:
        return dict(self.param_arrays())

    def param_counts(self) -> dict[str, int]:
        """Audit: stored scalars per block, biases counted where they live."""
        return {
            "proj": self.proj.param_count(include_bias=True),
            "cell": self.cell.param_count(include_biases=True),
            "readout": self.readout.param_count(include_bias=True),
        }

    def forward(self, inputs: np.ndarray, dropout_p: float = 0.0, rng=None, train: bool = False):
        """Probabilities (B, T, 88) for a padded batch; caches when training.

        Returns (probs, caches); caches is None unless train is True.
        """
        inputs = np.asarray(inputs, dtype=np.float64)
        b, t_max, _ = inputs.shape
        m = self.cell.hidden_size
        slope = self.spec.leaky_slope
        use_dropout = train and dropout_p > 0.0
        if use_dropout and rng is None:
            raise ValueError("dropout needs an rng")
        h = np.zeros((b, m))
        probs = np.empty_like(inputs)
        caches = [] if train else None
        on_state = self.spec.dropout_placement == "state"
        for t in range(t_max):
            a_p = self.proj.apply(inputs[:, t])
            xp = np.where(a_p > 0, a_p, slope * a_p)
            in_mask = state_mask = None
            if use_dropout:
                shape = h.shape if on_state else xp.shape
                keep = rng.random(shape) >= dropout_p
                mask = keep / (1.0 - dropout_p)
                state_mask = mask if on_state else None
                in_mask = None if on_state else mask
            step_cache = {} if train else None
            h = gru_step(self.cell, xp, h, dropout_mask=in_mask, state_mask=state_mask, cache=step_cache)
            logits = self.readout.apply(h)
            p = expit(logits)
            probs[:, t] = p
            if train:
                caches.append({"x88": inputs[:, t], "a_p": a_p, "xp": xp, "h": h, "gru": step_cache})
        return probs, caches

    def backward(self, caches, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Accumulate gradients for d(loss)/d(readout logits) over a batch.

        The sigmoid listed in forward() is folded into the loss, so the
        caller provides gradients with respect to the pre-sigmoid logits
        (for summed binary cross-entropy that is simply probs - targets,
        suitably masked and scaled).
        """
        grads = {name: np.zeros_like(a) for name, a in self.param_arrays()}
        slope = self.spec.leaky_slope
        dh_next = None
        for t in range(len(caches) - 1, -1, -1):
            c = caches[t]
            g_ro, dh = self.readout.vjp(c["h"], dlogits[:, t])
            for k, v in g_ro.items():
                grads[f"readout.{k}"] += v
            if dh_next is not None:
                dh = dh + dh_next
            g_cell, dxp, dh_next = gru_step_backward(self.cell, c["gru"], dh)
            for k, v in g_cell.items():
                grads[f"cell.{k}"] += v
            da_p = dxp * np.where(c["a_p"] > 0, 1.0, slope)
            g_proj, _ = self.proj.vjp(c["x88"], da_p)
            for k, v in g_proj.items():
                grads[f"proj.{k}"] += v
        return grads


def _glorot_sigma(rows: int, cols: int) -> float:
    return float(np.sqrt(2.0 / (rows + cols)))


def build_model(spec: ModelSpec, seed) -> SequenceModel:
    """Fresh model with variance-matched initialization everywhere."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n, m = spec.input_size, spec.hidden_size

    proj = init_factorized(
        "dense",
        TensorizedShape((n,), (NUM_NOTES,)),
        sigma_w=_glorot_sigma(n, NUM_NOTES),
        seed=rng,
    )
    readout = init_factorized(
        "dense",
        TensorizedShape((NUM_NOTES,), (m,)),
        sigma_w=_glorot_sigma(NUM_NOTES, m),
        seed=rng,
    )

    if spec.model_kind == "dense":
        shape_x = TensorizedShape((m,), (n,))
        shape_h = TensorizedShape((m,), (m,))
        ranks = None
    else:
        shape_x = TensorizedShape(spec.m_dims, spec.n_dims_input)
        shape_h = TensorizedShape(spec.m_dims, spec.n_dims_hidden)
        ranks = spec.ranks

    def op(shape):
        return init_factorized(
            spec.model_kind,
            shape,
            ranks=ranks,
            sigma_w=_glorot_sigma(shape.rows, shape.cols),
            seed=rng,
            with_bias=False,
        )

    cell = GRUCell(
        w_xr=op(shape_x), w_hr=op(shape_h),
        w_xz=op(shape_x), w_hz=op(shape_h),
        w_xh=op(shape_x), w_hh=op(shape_h),
        b_r=np.zeros(m), b_z=np.zeros(m), b_h=np.zeros(m),
    )
    return SequenceModel(spec=spec, proj=proj, cell=cell, readout=readout)


def save_model(model: SequenceModel, path) -> None:
    payload = {
        "format": "tensorcells-model",
        "version": 1,
        "spec": {
            "model_kind": model.spec.model_kind,
            "input_size": model.spec.input_size,
            "hidden_size": model.spec.hidden_size,
            "m_dims": list(model.spec.m_dims),
            "n_dims_input": list(model.spec.n_dims_input),
            "n_dims_hidden": list(model.spec.n_dims_hidden),
            "ranks": list(model.spec.ranks),
            "leaky_slope": model.spec.leaky_slope,
            "dropout_placement": model.spec.dropout_placement,
        },
        "proj": operator_to_payload(model.proj),
        "cell": cell_to_payload(model.cell),
        "readout": operator_to_payload(model.readout),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> SequenceModel:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as e:
        raise DataError(f"cannot read model {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"model file {path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict) or payload.get("format") != "tensorcells-model":
        raise DataError(f"{path} is not a tensorcells model file")
    try:
        s = payload["spec"]
        spec = ModelSpec(
            model_kind=s["model_kind"],
            input_size=s["input_size"],
            hidden_size=s["hidden_size"],
            m_dims=tuple(s["m_dims"]),
            n_dims_input=tuple(s["n_dims_input"]),
            n_dims_hidden=tuple(s["n_dims_hidden"]),
            ranks=tuple(s["ranks"]),
            leaky_slope=s["leaky_slope"],
            dropout_placement=s.get("dropout_placement", "input"),
        )
        return SequenceModel(
            spec=spec,
            proj=operator_from_payload(payload["proj"]),
            cell=cell_from_payload(payload["cell"]),
            readout=operator_from_payload(payload["readout"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"model file {path} is corrupt: {e}") from e
