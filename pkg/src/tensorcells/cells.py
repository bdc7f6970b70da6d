"""Elman, LSTM, and GRU cells over pluggable factorized projections.

Every projection is a :class:`~tensorcells.factorized.FactorizedLinear`
without its own bias; the per-gate biases belong to the cell, so a dense
GRU cell stores exactly 3*(M*N + M*M + M) scalars. Steps accept a single
timestep vector or a batch (B, size); gradients flow through the
operators' hand-derived vjps.

The GRU is the flagship: the reset and update gates are sigmoids of the
projected input and previous state, the candidate state is a tanh of the
input plus the reset-scaled previous state, and the new state is the
convex blend (1 - z) * h_prev + z * candidate. An optional inverted
dropout mask multiplies the cell input only; the recurrent path is never
dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .factorized import FactorizedLinear, operator_from_payload, operator_to_payload

__all__ = [
    "CellState",
    "GRUCell",
    "LSTMCell",
    "ElmanCell",
    "gru_step",
    "lstm_step",
    "elman_step",
    "run_sequence",
    "cell_to_payload",
    "cell_from_payload",
]


@dataclass
class CellState:
    """Hidden state h plus, for LSTM, the memory cell c."""

    h: np.ndarray
    c: np.ndarray | None = None


def _check_operator(op: FactorizedLinear, rows: int, cols: int, name: str) -> None:
    if op.rows != rows or op.cols != cols:
        raise ValueError(f"{name} is {op.rows} x {op.cols}, expected {rows} x {cols}")
    if op.bias is not None:
        raise ValueError(f"{name} must not carry its own bias; gate biases live on the cell")


def _vec(name: str, v: np.ndarray, size: int) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape != (size,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({size},)")
    return v


@dataclass
class GRUCell:
    """Gated recurrent unit with independent input/hidden projections per gate."""

    w_xr: FactorizedLinear
    w_hr: FactorizedLinear
    w_xz: FactorizedLinear
    w_hz: FactorizedLinear
    w_xh: FactorizedLinear
    w_hh: FactorizedLinear
    b_r: np.ndarray
    b_z: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        m, n = self.w_xr.rows, self.w_xr.cols
        for name in ("w_xr", "w_xz", "w_xh"):
            _check_operator(getattr(self, name), m, n, name)
        for name in ("w_hr", "w_hz", "w_hh"):
            _check_operator(getattr(self, name), m, m, name)
        self.b_r = _vec("b_r", self.b_r, m)
        self.b_z = _vec("b_z", self.b_z, m)
        self.b_h = _vec("b_h", self.b_h, m)

    @property
    def hidden_size(self) -> int:
        return self.w_xr.rows

    @property
    def input_size(self) -> int:
        return self.w_xr.cols

    def operators(self):
        return [
            ("xr", self.w_xr),
            ("hr", self.w_hr),
            ("xz", self.w_xz),
            ("hz", self.w_hz),
            ("xh", self.w_xh),
            ("hh", self.w_hh),
        ]

    def param_arrays(self):
        out = []
        for prefix, op in self.operators():
            out += [(f"{prefix}.{name}", a) for name, a in op.param_arrays()]
        out += [("b_r", self.b_r), ("b_z", self.b_z), ("b_h", self.b_h)]
        return out

    def param_count(self, include_biases: bool = True) -> int:
        n = sum(op.param_count() for _, op in self.operators())
        if include_biases:
            n += 3 * self.hidden_size
        return n


@dataclass
class LSTMCell:
    """LSTM with diagonal peephole connections into all three gates."""

    w_xi: FactorizedLinear
    w_hi: FactorizedLinear
    w_xf: FactorizedLinear
    w_hf: FactorizedLinear
    w_xc: FactorizedLinear
    w_hc: FactorizedLinear
    w_xo: FactorizedLinear
    w_ho: FactorizedLinear
    w_ci: np.ndarray
    w_cf: np.ndarray
    w_co: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        m, n = self.w_xi.rows, self.w_xi.cols
        for name in ("w_xi", "w_xf", "w_xc", "w_xo"):
            _check_operator(getattr(self, name), m, n, name)
        for name in ("w_hi", "w_hf", "w_hc", "w_ho"):
            _check_operator(getattr(self, name), m, m, name)
        for name in ("w_ci", "w_cf", "w_co", "b_i", "b_f", "b_c", "b_o"):
            setattr(self, name, _vec(name, getattr(self, name), m))

    @property
    def hidden_size(self) -> int:
        return self.w_xi.rows

    @property
    def input_size(self) -> int:
        return self.w_xi.cols

    def operators(self):
        return [
            ("xi", self.w_xi),
            ("hi", self.w_hi),
            ("xf", self.w_xf),
            ("hf", self.w_hf),
            ("xc", self.w_xc),
            ("hc", self.w_hc),
            ("xo", self.w_xo),
            ("ho", self.w_ho),
        ]

    def param_arrays(self):
        out = []
        for prefix, op in self.operators():
            out += [(f"{prefix}.{name}", a) for name, a in op.param_arrays()]
        out += [
            ("w_ci", self.w_ci),
            ("w_cf", self.w_cf),
            ("w_co", self.w_co),
            ("b_i", self.b_i),
            ("b_f", self.b_f),
            ("b_c", self.b_c),
            ("b_o", self.b_o),
        ]
        return out


@dataclass
class ElmanCell:
    """Plain tanh recurrence."""

    w_xh: FactorizedLinear
    w_hh: FactorizedLinear
    b_h: np.ndarray

    def __post_init__(self):
        m, n = self.w_xh.rows, self.w_xh.cols
        _check_operator(self.w_xh, m, n, "w_xh")
        _check_operator(self.w_hh, m, m, "w_hh")
        self.b_h = _vec("b_h", self.b_h, m)

    @property
    def hidden_size(self) -> int:
        return self.w_xh.rows

    @property
    def input_size(self) -> int:
        return self.w_xh.cols

    def operators(self):
        return [("xh", self.w_xh), ("hh", self.w_hh)]

    def param_arrays(self):
        out = []
        for prefix, op in self.operators():
            out += [(f"{prefix}.{name}", a) for name, a in op.param_arrays()]
        out.append(("b_h", self.b_h))
        return out


# -- steps -------------------------------------------------------------------


def _apply_mask(x, dropout_mask):
    if dropout_mask is None:
        return x
    mask = np.asarray(dropout_mask, dtype=np.float64)
    if mask.shape != np.shape(x):
        raise ValueError(f"dropout mask shape {mask.shape} does not match input {np.shape(x)}")
    return x * mask


def gru_step(cell: GRUCell, x_t, h_prev, dropout_mask=None, state_mask=None, cache: dict | None = None):
    """One GRU update; pass a dict as ``cache`` to enable the backward step.

    ``dropout_mask`` multiplies the cell input (the default placement);
    ``state_mask`` instead multiplies the previous state as seen by the
    gates and candidate, leaving the convex blend's h_prev untouched.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    xd = _apply_mask(x_t, dropout_mask)
    hs = _apply_mask(h_prev, state_mask)
    r = expit(cell.w_xr.apply(xd) + cell.w_hr.apply(hs) + cell.b_r)
    z = expit(cell.w_xz.apply(xd) + cell.w_hz.apply(hs) + cell.b_z)
    rh = r * hs
    hc = np.tanh(cell.w_xh.apply(xd) + cell.w_hh.apply(rh) + cell.b_h)
    h_t = (1.0 - z) * h_prev + z * hc
    if cache is not None:
        cache.update(
            xd=xd, h_prev=h_prev, hs=hs, r=r, z=z, rh=rh, hc=hc,
            mask=dropout_mask, state_mask=state_mask,
        )
    return h_t


def gru_step_backward(cell: GRUCell, cache: dict, dh):
    """Reverse one GRU step.

    Returns (grads, dx, dh_prev); grads is keyed like
    GRUCell.param_arrays() and holds this step's contribution only.
    """
    xd, h_prev, hs = cache["xd"], cache["h_prev"], cache["hs"]
    r, z, rh, hc = cache["r"], cache["z"], cache["rh"], cache["hc"]

    dz = dh * (hc - h_prev)
    dhc = dh * z
    dh_prev = dh * (1.0 - z)

    da_h = dhc * (1.0 - hc * hc)
    g_xh, dxd = cell.w_xh.vjp(xd, da_h)
    g_hh, drh = cell.w_hh.vjp(rh, da_h)
    dhs = drh * r
    dr = drh * hs

    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)
    g_xz, dxd2 = cell.w_xz.vjp(xd, da_z)
    g_hz, dhs2 = cell.w_hz.vjp(hs, da_z)
    g_xr, dxd3 = cell.w_xr.vjp(xd, da_r)
    g_hr, dhs3 = cell.w_hr.vjp(hs, da_r)
    dhs = dhs + dhs2 + dhs3
    if cache["state_mask"] is not None:
        dhs = dhs * np.asarray(cache["state_mask"], dtype=np.float64)
    dh_prev = dh_prev + dhs
    dxd = dxd + dxd2 + dxd3

    batched = da_h.ndim == 2
    grads = {}
    for prefix, g in (("xr", g_xr), ("hr", g_hr), ("xz", g_xz), ("hz", g_hz), ("xh", g_xh), ("hh", g_hh)):
        grads.update({f"{prefix}.{k}": v for k, v in g.items()})
    grads["b_r"] = da_r.sum(axis=0) if batched else da_r
    grads["b_z"] = da_z.sum(axis=0) if batched else da_z
    grads["b_h"] = da_h.sum(axis=0) if batched else da_h

    dx = dxd if cache["mask"] is None else dxd * np.asarray(cache["mask"], dtype=np.float64)
    return grads, dx, dh_prev


def lstm_step(cell: LSTMCell, x_t, state: CellState, cache: dict | None = None) -> CellState:
    """One peephole-LSTM update."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(state.h, dtype=np.float64)
    if state.c is None:
        raise ValueError("LSTM state needs a memory cell c")
    c_prev = np.asarray(state.c, dtype=np.float64)
    i = expit(cell.w_xi.apply(x_t) + cell.w_hi.apply(h_prev) + cell.w_ci * c_prev + cell.b_i)
    f = expit(cell.w_xf.apply(x_t) + cell.w_hf.apply(h_prev) + cell.w_cf * c_prev + cell.b_f)
    g = np.tanh(cell.w_xc.apply(x_t) + cell.w_hc.apply(h_prev) + cell.b_c)
    c = f * c_prev + i * g
    o = expit(cell.w_xo.apply(x_t) + cell.w_ho.apply(h_prev) + cell.w_co * c + cell.b_o)
    tc = np.tanh(c)
    h = o * tc
    if cache is not None:
        cache.update(x=x_t, h_prev=h_prev, c_prev=c_prev, i=i, f=f, g=g, c=c, o=o, tc=tc)
    return CellState(h=h, c=c)


def lstm_step_backward(cell: LSTMCell, cache: dict, dh, dc=None):
    """Reverse one LSTM step; returns (grads, dx, dh_prev, dc_prev)."""
    x, h_prev, c_prev = cache["x"], cache["h_prev"], cache["c_prev"]
    i, f, g, c, o, tc = cache["i"], cache["f"], cache["g"], cache["c"], cache["o"], cache["tc"]

    do = dh * tc
    dc_tot = dh * o * (1.0 - tc * tc)
    if dc is not None:
        dc_tot = dc_tot + dc
    da_o = do * o * (1.0 - o)
    dc_tot = dc_tot + da_o * cell.w_co

    di = dc_tot * g
    df = dc_tot * c_prev
    dg = dc_tot * i
    dc_prev = dc_tot * f

    da_i = di * i * (1.0 - i)
    da_f = df * f * (1.0 - f)
    da_c = dg * (1.0 - g * g)
    dc_prev = dc_prev + da_i * cell.w_ci + da_f * cell.w_cf

    g_xi, dx = cell.w_xi.vjp(x, da_i)
    g_hi, dh_prev = cell.w_hi.vjp(h_prev, da_i)
    g_xf, dx2 = cell.w_xf.vjp(x, da_f)
    g_hf, dh2 = cell.w_hf.vjp(h_prev, da_f)
    g_xc, dx3 = cell.w_xc.vjp(x, da_c)
    g_hc, dh3 = cell.w_hc.vjp(h_prev, da_c)
    g_xo, dx4 = cell.w_xo.vjp(x, da_o)
    g_ho, dh4 = cell.w_ho.vjp(h_prev, da_o)
    dx = dx + dx2 + dx3 + dx4
    dh_prev = dh_prev + dh2 + dh3 + dh4

    batched = dh.ndim == 2

    def _sum(v):
        return v.sum(axis=0) if batched else v

    grads = {}
    for prefix, gg in (
        ("xi", g_xi), ("hi", g_hi), ("xf", g_xf), ("hf", g_hf),
        ("xc", g_xc), ("hc", g_hc), ("xo", g_xo), ("ho", g_ho),
    ):
        grads.update({f"{prefix}.{k}": v for k, v in gg.items()})
    grads["w_ci"] = _sum(da_i * c_prev)
    grads["w_cf"] = _sum(da_f * c_prev)
    grads["w_co"] = _sum(da_o * c)
    grads["b_i"] = _sum(da_i)
    grads["b_f"] = _sum(da_f)
    grads["b_c"] = _sum(da_c)
    grads["b_o"] = _sum(da_o)
    return grads, dx, dh_prev, dc_prev


def elman_step(cell: ElmanCell, x_t, h_prev, cache: dict | None = None):
    """One simple tanh recurrence update."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    h = np.tanh(cell.w_xh.apply(x_t) + cell.w_hh.apply(h_prev) + cell.b_h)
    if cache is not None:
        cache.update(x=x_t, h_prev=h_prev, h=h)
    return h


def elman_step_backward(cell: ElmanCell, cache: dict, dh):
    da = dh * (1.0 - cache["h"] * cache["h"])
    g_xh, dx = cell.w_xh.vjp(cache["x"], da)
    g_hh, dh_prev = cell.w_hh.vjp(cache["h_prev"], da)
    grads = {f"xh.{k}": v for k, v in g_xh.items()}
    grads.update({f"hh.{k}": v for k, v in g_hh.items()})
    grads["b_h"] = da.sum(axis=0) if da.ndim == 2 else da
    return grads, dx, dh_prev


def run_sequence(cell, inputs, initial=None):
    """Fold a step function over a sequence of input vectors.

    Returns the list of per-step states: h vectors for GRU/Elman cells,
    CellState for LSTM. The initial state defaults to zeros.
    """
    m = cell.hidden_size
    states = []
    if isinstance(cell, LSTMCell):
        state = initial if initial is not None else CellState(np.zeros(m), np.zeros(m))
        for x in inputs:
            state = lstm_step(cell, x, state)
            states.append(state)
    elif isinstance(cell, GRUCell):
        h = initial if initial is not None else np.zeros(m)
        for x in inputs:
            h = gru_step(cell, x, h)
            states.append(h)
    elif isinstance(cell, ElmanCell):
        h = initial if initial is not None else np.zeros(m)
        for x in inputs:
            h = elman_step(cell, x, h)
            states.append(h)
    else:
        raise TypeError(f"unknown cell type {type(cell).__name__}")
    return states


# -- serialization --------------------------------------------------------------


def cell_to_payload(cell: GRUCell) -> dict:
    """GRU cell as a keyed collection of operator payloads plus gate biases."""
    return {
        "cell_type": "gru",
        "operators": {name: operator_to_payload(op) for name, op in cell.operators()},
        "biases": {
            "b_r": [v.hex() for v in cell.b_r.tolist()],
            "b_z": [v.hex() for v in cell.b_z.tolist()],
            "b_h": [v.hex() for v in cell.b_h.tolist()],
        },
    }


def cell_from_payload(payload: dict) -> GRUCell:
    if payload.get("cell_type") != "gru":
        raise ValueError(f"unsupported cell type {payload.get('cell_type')!r}")
    ops = {name: operator_from_payload(p) for name, p in payload["operators"].items()}
    biases = {
        name: np.array([float.fromhex(v) for v in vals], dtype=np.float64)
        for name, vals in payload["biases"].items()
    }
    return GRUCell(
        w_xr=ops["xr"], w_hr=ops["hr"], w_xz=ops["xz"],
        w_hz=ops["hz"], w_xh=ops["xh"], w_hh=ops["hh"],
        b_r=biases["b_r"], b_z=biases["b_z"], b_h=biases["b_h"],
    )
