"""Factorized linear operators: dense, CP, Tucker, and tensor-train weights.

A weight matrix W of size M x N is tensorized into a 2d-order tensor with
mode sizes (m_1..m_d, n_1..n_d), prod(m) == M and prod(n) == N, under the
big-endian row-major index bijections of :mod:`tensorcells.tensor_core`.
The tensor is stored in one of three factorized forms (or dense), and the
matrix-vector product y = W x + b is evaluated without ever materializing
W, by mode-wise contractions routed through the active kernel backend.

Reverse-mode derivatives (`vjp`) are hand-derived per representation and
return exact gradients of upstream . (W x + b) for every stored scalar.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigError
from .tensor_core import Shape, check_shape, mode_product, outer_accumulate

__all__ = [
    "TensorizedShape",
    "DenseMatrix",
    "CPFactors",
    "TuckerFactors",
    "TTCores",
    "FactorizedLinear",
    "init_factorized",
    "init_sigma",
    "operator_to_payload",
    "operator_from_payload",
]


@dataclass(frozen=True)
class TensorizedShape:
    """Factorization of a matrix's row/column counts into mode sizes."""

    m_dims: Shape
    n_dims: Shape

    def __post_init__(self):
        object.__setattr__(self, "m_dims", check_shape(self.m_dims))
        object.__setattr__(self, "n_dims", check_shape(self.n_dims))
        if len(self.m_dims) != len(self.n_dims):
            raise ConfigError(
                f"row factorization {self.m_dims} and column factorization "
                f"{self.n_dims} must have the same order"
            )

    @property
    def d(self) -> int:
        return len(self.m_dims)

    @property
    def rows(self) -> int:
        return math.prod(self.m_dims)

    @property
    def cols(self) -> int:
        return math.prod(self.n_dims)


def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


@dataclass
class DenseMatrix:
    """Uncompressed weights; the baseline representation."""

    matrix: np.ndarray

    kind = "dense"

    def __post_init__(self):
        self.matrix = _as_f64(self.matrix)
        if self.matrix.ndim != 2:
            raise ValueError(f"dense weights must be a matrix, got ndim={self.matrix.ndim}")

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def param_arrays(self):
        return [("matrix", self.matrix)]

    def param_count(self) -> int:
        return self.matrix.size

    def ranks_list(self) -> list[int]:
        return []


@dataclass
class CPFactors:
    """Sum of ``rank`` outer products of per-mode column vectors.

    gm[k] has shape (m_k, R); gn[k] has shape (n_k, R). Column r across
    all factors defines one rank-1 term of the weight tensor.
    """

    shape: TensorizedShape
    rank: int
    gm: list[np.ndarray]
    gn: list[np.ndarray]

    kind = "cp"

    def __post_init__(self):
        if self.rank < 1:
            raise ConfigError(f"CP rank must be >= 1, got {self.rank}")
        self.gm = [_as_f64(g) for g in self.gm]
        self.gn = [_as_f64(g) for g in self.gn]
        d = self.shape.d
        if len(self.gm) != d or len(self.gn) != d:
            raise ConfigError(f"expected {d} row and column factors")
        for k in range(d):
            if self.gm[k].shape != (self.shape.m_dims[k], self.rank):
                raise ValueError(f"gm[{k}] has shape {self.gm[k].shape}")
            if self.gn[k].shape != (self.shape.n_dims[k], self.rank):
                raise ValueError(f"gn[{k}] has shape {self.gn[k].shape}")

    @property
    def rows(self) -> int:
        return self.shape.rows

    @property
    def cols(self) -> int:
        return self.shape.cols

    def param_arrays(self):
        out = [(f"gm{k}", g) for k, g in enumerate(self.gm)]
        out += [(f"gn{k}", g) for k, g in enumerate(self.gn)]
        return out

    def param_count(self) -> int:
        return self.rank * sum(self.shape.m_dims) + self.rank * sum(self.shape.n_dims)

    def ranks_list(self) -> list[int]:
        return [self.rank]


@dataclass
class TuckerFactors:
    """Core tensor contracted with one factor matrix per mode.

    ranks holds 2d integers (r_1..r_d, r_{d+1}..r_{2d}); the core has
    exactly those mode sizes; gm[k] is (m_k, r_k), gn[k] is (n_k, r_{d+k}).
    Ranks equal to the mode size are allowed (exact recovery) but warned
    about, since they no longer compress that mode.
    """

    shape: TensorizedShape
    ranks: Shape
    core: np.ndarray
    gm: list[np.ndarray]
    gn: list[np.ndarray]

    kind = "tucker"

    def __post_init__(self):
        d = self.shape.d
        self.ranks = check_shape(self.ranks)
        if len(self.ranks) != 2 * d:
            raise ConfigError(f"Tucker needs {2 * d} ranks, got {len(self.ranks)}")
        for k in range(d):
            for r, dim, side in (
                (self.ranks[k], self.shape.m_dims[k], "row"),
                (self.ranks[d + k], self.shape.n_dims[k], "column"),
            ):
                if r > dim:
                    raise ConfigError(f"{side} rank {r} exceeds mode size {dim}")
                if r == dim:
                    warnings.warn(
                        f"Tucker {side} rank {r} equals mode size {dim}; "
                        "no compression on that mode",
                        stacklevel=2,
                    )
        self.core = _as_f64(self.core)
        if self.core.shape != self.ranks:
            raise ValueError(f"core has shape {self.core.shape}, ranks are {self.ranks}")
        self.gm = [_as_f64(g) for g in self.gm]
        self.gn = [_as_f64(g) for g in self.gn]
        for k in range(d):
            if self.gm[k].shape != (self.shape.m_dims[k], self.ranks[k]):
                raise ValueError(f"gm[{k}] has shape {self.gm[k].shape}")
            if self.gn[k].shape != (self.shape.n_dims[k], self.ranks[d + k]):
                raise ValueError(f"gn[{k}] has shape {self.gn[k].shape}")

    @property
    def rows(self) -> int:
        return self.shape.rows

    @property
    def cols(self) -> int:
        return self.shape.cols

    def param_arrays(self):
        out = [("core", self.core)]
        out += [(f"gm{k}", g) for k, g in enumerate(self.gm)]
        out += [(f"gn{k}", g) for k, g in enumerate(self.gn)]
        return out

    def param_count(self) -> int:
        d = self.shape.d
        factors = sum(
            self.shape.m_dims[k] * self.ranks[k] + self.shape.n_dims[k] * self.ranks[d + k]
            for k in range(d)
        )
        return factors + math.prod(self.ranks)

    def ranks_list(self) -> list[int]:
        return list(self.ranks)


@dataclass
class TTCores:
    """Tensor-train chain; core k has shape (r_k, m_k, n_k, r_{k+1}).

    tt_ranks holds d+1 integers with tt_ranks[0] == tt_ranks[d] == 1; the
    weight-tensor entry is the product of the d core slices selected by
    the row/column digits, summed over the interior rank indices.
    """

    shape: TensorizedShape
    tt_ranks: Shape
    cores: list[np.ndarray]

    kind = "tt"

    def __post_init__(self):
        d = self.shape.d
        self.tt_ranks = check_shape(self.tt_ranks)
        if len(self.tt_ranks) != d + 1:
            raise ConfigError(f"tensor train needs {d + 1} ranks, got {len(self.tt_ranks)}")
        if self.tt_ranks[0] != 1 or self.tt_ranks[-1] != 1:
            raise ConfigError(f"boundary ranks must be 1, got {self.tt_ranks}")
        self.cores = [_as_f64(c) for c in self.cores]
        if len(self.cores) != d:
            raise ConfigError(f"expected {d} cores, got {len(self.cores)}")
        for k in range(d):
            want = (self.tt_ranks[k], self.shape.m_dims[k], self.shape.n_dims[k], self.tt_ranks[k + 1])
            if self.cores[k].shape != want:
                raise ValueError(f"core {k} has shape {self.cores[k].shape}, expected {want}")

    @property
    def rows(self) -> int:
        return self.shape.rows

    @property
    def cols(self) -> int:
        return self.shape.cols

    def param_arrays(self):
        return [(f"core{k}", c) for k, c in enumerate(self.cores)]

    def param_count(self) -> int:
        return sum(c.size for c in self.cores)

    def ranks_list(self) -> list[int]:
        return list(self.tt_ranks)


Weights = DenseMatrix | CPFactors | TuckerFactors | TTCores


@dataclass
class FactorizedLinear:
    """A linear map y = W x (+ bias) whose W is stored factorized.

    The bias is always dense (length rows) and optional; recurrent cells
    keep per-gate biases outside their operators, standalone layers keep
    the bias here.
    """

    weights: Weights
    bias: np.ndarray | None = None

    def __post_init__(self):
        if self.bias is not None:
            self.bias = _as_f64(self.bias)
            if self.bias.shape != (self.weights.rows,):
                raise ValueError(
                    f"bias has shape {self.bias.shape}, expected ({self.weights.rows},)"
                )

    @property
    def kind(self) -> str:
        return self.weights.kind

    @property
    def rows(self) -> int:
        return self.weights.rows

    @property
    def cols(self) -> int:
        return self.weights.cols

    # -- parameter bookkeeping ------------------------------------------------

    def param_arrays(self):
        """Stored arrays as (name, array) pairs, bias last when present."""
        out = list(self.weights.param_arrays())
        if self.bias is not None:
            out.append(("bias", self.bias))
        return out

    def param_count(self, include_bias: bool = False) -> int:
        n = self.weights.param_count()
        if include_bias and self.bias is not None:
            n += self.bias.size
        return n

    # -- dense reconstruction ---------------------------------------------------

    def materialize(self) -> np.ndarray:
        """The dense rows x cols matrix this operator represents (no bias)."""
        w = self.weights
        if isinstance(w, DenseMatrix):
            return w.matrix.copy()
        m_dims, n_dims, d = w.shape.m_dims, w.shape.n_dims, w.shape.d
        if isinstance(w, CPFactors):
            t = np.zeros(m_dims + n_dims)
            for r in range(w.rank):
                vecs = [w.gm[k][:, r] for k in range(d)] + [w.gn[k][:, r] for k in range(d)]
                outer_accumulate(vecs, t)
        elif isinstance(w, TuckerFactors):
            t = w.core
            for k in range(d):
                t = mode_product(t, w.gm[k], mode=k)
            for k in range(d):
                t = mode_product(t, w.gn[k], mode=d + k)
        else:
            t = w.cores[0][0]  # (m_0, n_0, r_1)
            for k in range(1, d):
                t = np.tensordot(t, w.cores[k], axes=([-1], [0]))
            t = t[..., 0]  # drop the trailing unit rank
            # interleaved (m_1, n_1, .., m_d, n_d) -> (m_1..m_d, n_1..n_d)
            t = t.transpose(tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2)))
        return np.ascontiguousarray(t).reshape(self.rows, self.cols)

    # -- forward ---------------------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Matrix-vector product plus bias, evaluated factor by factor.

        Accepts a single vector of length cols or a batch (B, cols).
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x2 = _as_f64(x[None, :] if single else x)
        if x2.ndim != 2 or x2.shape[1] != self.cols:
            raise ValueError(f"input has shape {x.shape}, operator expects length {self.cols}")
        w = self.weights
        if isinstance(w, DenseMatrix):
            y2 = x2 @ w.matrix.T
        elif isinstance(w, CPFactors):
            y2 = _cp_apply(w, x2)
        elif isinstance(w, TuckerFactors):
            y2 = _tucker_apply(w, x2)
        else:
            y2 = _tt_apply(w, x2)
        if self.bias is not None:
            y2 = y2 + self.bias
        return y2[0] if single else y2

    # -- reverse mode ------------------------------------------------------------

    def vjp(self, x: np.ndarray, upstream: np.ndarray):
        """Gradients of upstream . apply(x) for every stored scalar and for x.

        Returns (grads, grad_x) where grads maps the names from
        param_arrays() to same-shaped arrays. Batched inputs (B, cols) /
        (B, rows) accumulate parameter gradients over the batch.
        """
        x = np.asarray(x, dtype=np.float64)
        upstream = np.asarray(upstream, dtype=np.float64)
        single = x.ndim == 1
        x2 = _as_f64(x[None, :] if single else x)
        up2 = _as_f64(upstream[None, :] if single else upstream)
        if x2.shape[1] != self.cols or up2.shape[1] != self.rows or x2.shape[0] != up2.shape[0]:
            raise ValueError(
                f"vjp shape mismatch: x {x.shape}, upstream {upstream.shape}, "
                f"operator is {self.rows} x {self.cols}"
            )
        w = self.weights
        if isinstance(w, DenseMatrix):
            grads = {"matrix": up2.T @ x2}
            dx2 = up2 @ w.matrix
        elif isinstance(w, CPFactors):
            grads, dx2 = _cp_vjp(w, x2, up2)
        elif isinstance(w, TuckerFactors):
            grads, dx2 = _tucker_vjp(w, x2, up2)
        else:
            grads, dx2 = _tt_vjp(w, x2, up2)
        if self.bias is not None:
            grads["bias"] = up2.sum(axis=0)
        return grads, (dx2[0] if single else dx2)


# -- CP kernels ------------------------------------------------------------------


def _cp_apply(w: CPFactors, x2: np.ndarray) -> np.ndarray:
    k = backend.kernels
    n_dims, m_dims, d, R = w.shape.n_dims, w.shape.m_dims, w.shape.d, w.rank
    B = x2.shape[0]
    s = k.rank_contract_init(x2.reshape(B, n_dims[0], -1), w.gn[0])
    for kk in range(1, d):
        s = k.rank_contract(s.reshape(B, n_dims[kk], -1, R), w.gn[kk])
    e = s  # (B, 1, R): per-rank scalars
    for kk in range(d - 1, -1, -1):
        e = k.rank_expand(w.gm[kk], e).reshape(B, -1, R)
    return e.sum(axis=2)


def _cp_vjp(w: CPFactors, x2: np.ndarray, up2: np.ndarray):
    k = backend.kernels
    n_dims, m_dims, d, R = w.shape.n_dims, w.shape.m_dims, w.shape.d, w.rank
    B = x2.shape[0]

    s_out: list[np.ndarray] = []  # contraction outputs, step 0..d-1
    s = k.rank_contract_init(x2.reshape(B, n_dims[0], -1), w.gn[0])
    s_out.append(s)
    for kk in range(1, d):
        s = k.rank_contract(s.reshape(B, n_dims[kk], -1, R), w.gn[kk])
        s_out.append(s)
    e_in: list[np.ndarray] = [None] * d  # expansion inputs, indexed by mode
    e = s
    for kk in range(d - 1, -1, -1):
        e_in[kk] = e
        e = k.rank_expand(w.gm[kk], e).reshape(B, -1, R)

    grads: dict[str, np.ndarray] = {}
    up3 = up2.reshape(B, m_dims[0], -1)
    grads["gm0"] = k.rank_outer_nr(up3, e_in[0])
    de = k.rank_expand_adj_nr(w.gm[0], up3)
    for kk in range(1, d):
        d4 = de.reshape(B, m_dims[kk], -1, R)
        grads[f"gm{kk}"] = k.rank_outer(d4, e_in[kk])
        de = k.rank_expand_adj(w.gm[kk], d4)
    ds = de  # (B, 1, R) == gradient of the fully contracted input side
    for kk in range(d - 1, 0, -1):
        in4 = s_out[kk - 1].reshape(B, n_dims[kk], -1, R)
        grads[f"gn{kk}"] = k.rank_outer(in4, ds)
        ds = k.rank_expand(w.gn[kk], ds).reshape(B, -1, R)
    in3 = x2.reshape(B, n_dims[0], -1)
    grads["gn0"] = k.rank_outer_nr(in3, ds)
    dx2 = k.rank_reduce(w.gn[0], ds).reshape(B, -1)
    return grads, dx2


# -- Tucker kernels -----------------------------------------------------------------


def _tucker_gn_sweep(w: TuckerFactors, x2: np.ndarray, keep_inputs: bool):
    """Contract x against all column factors; optionally cache step inputs."""
    k = backend.kernels
    d = w.shape.d
    n_dims = w.shape.n_dims
    rn = w.ranks[d:]
    B = x2.shape[0]
    inputs = []
    t = x2.reshape(B, 1, n_dims[0], -1)
    p = 1
    for kk in range(d):
        q = t.size // (B * p * n_dims[kk])
        t4 = t.reshape(B, p, n_dims[kk], q)
        if keep_inputs:
            inputs.append(t4)
        t = k.mode_contract(t4, w.gn[kk])
        p *= rn[kk]
    return t.reshape(B, -1), inputs  # (B, prod rn)


def _tucker_apply(w: TuckerFactors, x2: np.ndarray) -> np.ndarray:
    k = backend.kernels
    d = w.shape.d
    m_dims = w.shape.m_dims
    rm = w.ranks[:d]
    B = x2.shape[0]
    t, _ = _tucker_gn_sweep(w, x2, keep_inputs=False)
    core_mat = w.core.reshape(math.prod(rm), -1)
    u = t @ core_mat.T  # (B, prod rm)
    p = 1
    for kk in range(d):
        q = u.size // (B * p * rm[kk])
        u4 = u.reshape(B, p, rm[kk], q)
        u = k.mode_contract(u4, _as_f64(w.gm[kk].T))
        p *= m_dims[kk]
    return u.reshape(B, -1)


def _tucker_vjp(w: TuckerFactors, x2: np.ndarray, up2: np.ndarray):
    k = backend.kernels
    d = w.shape.d
    m_dims, n_dims = w.shape.m_dims, w.shape.n_dims
    rm, rn = w.ranks[:d], w.ranks[d:]
    B = x2.shape[0]

    t_final, gn_inputs = _tucker_gn_sweep(w, x2, keep_inputs=True)
    core_mat = w.core.reshape(math.prod(rm), -1)
    u0 = t_final @ core_mat.T
    gm_inputs = []
    u = u0
    p = 1
    for kk in range(d):
        q = u.size // (B * p * rm[kk])
        u4 = u.reshape(B, p, rm[kk], q)
        gm_inputs.append(u4)
        u = k.mode_contract(u4, _as_f64(w.gm[kk].T))
        p *= m_dims[kk]

    grads: dict[str, np.ndarray] = {}
    du = up2
    for kk in range(d - 1, -1, -1):
        u4 = gm_inputs[kk]
        _, p, _, q = u4.shape
        d4 = du.reshape(B, p, m_dims[kk], q)
        grads[f"gm{kk}"] = k.mode_outer(d4, u4)
        du = k.mode_contract(d4, w.gm[kk])
    du0 = du.reshape(B, -1)
    grads["core"] = (du0.T @ t_final).reshape(w.core.shape)
    dt = du0 @ core_mat
    for kk in range(d - 1, -1, -1):
        t4 = gn_inputs[kk]
        _, p, _, q = t4.shape
        d4 = dt.reshape(B, p, rn[kk], q)
        grads[f"gn{kk}"] = k.mode_outer(t4, d4)
        dt = k.mode_contract(d4, _as_f64(w.gn[kk].T))
    return grads, dt.reshape(B, -1)


# -- tensor-train kernels ---------------------------------------------------------


def _tt_sweep(w: TTCores, x2: np.ndarray, keep_inputs: bool):
    k = backend.kernels
    d = w.shape.d
    m_dims, n_dims, ranks = w.shape.m_dims, w.shape.n_dims, w.tt_ranks
    B = x2.shape[0]
    inputs = []
    a = x2.reshape(B, 1, n_dims[0], -1, 1)
    p = 1
    for kk in range(d):
        q = a.size // (B * p * n_dims[kk] * ranks[kk])
        a5 = a.reshape(B, p, n_dims[kk], q, ranks[kk])
        if keep_inputs:
            inputs.append(a5)
        a = k.tt_apply_step(a5, w.cores[kk])
        p *= m_dims[kk]
    return a.reshape(B, -1), inputs


def _tt_apply(w: TTCores, x2: np.ndarray) -> np.ndarray:
    y2, _ = _tt_sweep(w, x2, keep_inputs=False)
    return y2


def _tt_vjp(w: TTCores, x2: np.ndarray, up2: np.ndarray):
    k = backend.kernels
    d = w.shape.d
    m_dims, ranks = w.shape.m_dims, w.tt_ranks
    B = x2.shape[0]
    _, a_inputs = _tt_sweep(w, x2, keep_inputs=True)

    grads: dict[str, np.ndarray] = {}
    da = up2.reshape(B, -1, 1, 1)
    for kk in range(d - 1, -1, -1):
        a5 = a_inputs[kk]
        _, p, _, q, _ = a5.shape
        d5 = da.reshape(B, p, m_dims[kk], q, ranks[kk + 1])
        grads[f"core{kk}"] = k.tt_grad_core(a5, d5)
        da = k.tt_grad_input(w.cores[kk], d5)
    return grads, da.reshape(B, -1)


# -- initialization -------------------------------------------------------------


def _normalize_cp_ranks(ranks):
    if not isinstance(ranks, int):
        ranks = tuple(int(r) for r in np.atleast_1d(ranks))
        if len(ranks) != 1:
            raise ConfigError(f"CP takes a single rank, got {ranks}")
        ranks = ranks[0]
    if ranks < 1:
        raise ConfigError(f"CP rank must be >= 1, got {ranks}")
    return (ranks,)


def init_sigma(kind: str, shape: TensorizedShape, ranks, sigma_w: float) -> float:
    """Standard deviation for the stored scalars of a freshly drawn operator.

    Chosen so that, under the independence-based sum/product variance
    rules, the reconstructed matrix entries have variance sigma_w^2:
    the 4d-th root of sigma_w^2/R for CP, the (4d+2)-th root of
    sigma_w^2/prod(ranks) for Tucker, the 2d-th root of sigma_w^2 over
    the product of interior ranks for a tensor train, and sigma_w itself
    for dense weights.
    """
    d = shape.d
    if sigma_w <= 0:
        raise ConfigError(f"sigma_w must be positive, got {sigma_w}")
    if kind == "dense":
        return float(sigma_w)
    if kind == "cp":
        (rank,) = _normalize_cp_ranks(ranks)
        return float((sigma_w**2 / rank) ** (1.0 / (4 * d)))
    if kind == "tucker":
        ranks = tuple(int(r) for r in ranks)
        if len(ranks) == d:
            ranks = ranks + ranks
        return float((sigma_w**2 / math.prod(ranks)) ** (1.0 / (4 * d + 2)))
    if kind == "tt":
        ranks = tuple(int(r) for r in ranks)
        interior = math.prod(ranks[1:-1]) if len(ranks) > 2 else 1
        return float((sigma_w**2 / interior) ** (1.0 / (2 * d)))
    raise ConfigError(f"unknown operator kind {kind!r}")


def init_factorized(
    kind: str,
    shape: TensorizedShape,
    ranks=None,
    sigma_w: float = 1.0,
    seed=0,
    with_bias: bool = True,
) -> FactorizedLinear:
    """Draw a fresh operator whose materialized entries have variance sigma_w^2.

    Every stored scalar is i.i.d. N(0, sigma_g^2) with sigma_g chosen per
    representation so that independent sum/product variance rules give the
    reconstructed matrix the target entry variance; the bias starts at
    zero. ``seed`` may be an int or a numpy Generator.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sg = init_sigma(kind, shape, ranks, sigma_w)
    d = shape.d
    if kind == "dense":
        weights = DenseMatrix(rng.normal(0.0, sg, (shape.rows, shape.cols)))
    elif kind == "cp":
        (rank,) = _normalize_cp_ranks(ranks)
        gm = [rng.normal(0.0, sg, (m, rank)) for m in shape.m_dims]
        gn = [rng.normal(0.0, sg, (n, rank)) for n in shape.n_dims]
        weights = CPFactors(shape, rank, gm, gn)
    elif kind == "tucker":
        ranks = tuple(int(r) for r in ranks)
        if len(ranks) == d:  # shorthand: same rank tuple for rows and columns
            ranks = ranks + ranks
        if len(ranks) != 2 * d:
            raise ConfigError(f"Tucker needs {d} or {2 * d} ranks, got {len(ranks)}")
        core = rng.normal(0.0, sg, ranks)
        gm = [rng.normal(0.0, sg, (m, ranks[k])) for k, m in enumerate(shape.m_dims)]
        gn = [rng.normal(0.0, sg, (n, ranks[d + k])) for k, n in enumerate(shape.n_dims)]
        weights = TuckerFactors(shape, ranks, core, gm, gn)
    elif kind == "tt":
        ranks = tuple(int(r) for r in ranks)
        if len(ranks) != d + 1:
            raise ConfigError(f"tensor train needs {d + 1} ranks, got {len(ranks)}")
        cores = [
            rng.normal(0.0, sg, (ranks[k], shape.m_dims[k], shape.n_dims[k], ranks[k + 1]))
            for k in range(d)
        ]
        weights = TTCores(shape, ranks, cores)
    else:
        raise ConfigError(f"unknown operator kind {kind!r}")
    bias = np.zeros(shape.rows) if with_bias else None
    return FactorizedLinear(weights, bias)


# -- serialization -------------------------------------------------------------


def _encode_array(a: np.ndarray) -> list[str]:
    return [v.hex() for v in a.ravel().tolist()]


def _decode_array(values, shape) -> np.ndarray:
    flat = np.array([float.fromhex(v) for v in values], dtype=np.float64)
    return flat.reshape(shape)


def operator_to_payload(f: FactorizedLinear) -> dict:
    """JSON-ready description; floats as hex strings for bit-exact round trips."""
    w = f.weights
    payload: dict = {"kind": w.kind}
    if isinstance(w, DenseMatrix):
        payload["m_dims"] = [w.rows]
        payload["n_dims"] = [w.cols]
        payload["ranks"] = []
    else:
        payload["m_dims"] = list(w.shape.m_dims)
        payload["n_dims"] = list(w.shape.n_dims)
        payload["ranks"] = w.ranks_list()
    payload["arrays"] = {name: _encode_array(a) for name, a in w.param_arrays()}
    payload["bias"] = None if f.bias is None else _encode_array(f.bias)
    return payload


def operator_from_payload(payload: dict) -> FactorizedLinear:
    kind = payload["kind"]
    m_dims = tuple(payload["m_dims"])
    n_dims = tuple(payload["n_dims"])
    arrays = payload["arrays"]
    if kind == "dense":
        weights = DenseMatrix(_decode_array(arrays["matrix"], (m_dims[0], n_dims[0])))
    else:
        shape = TensorizedShape(m_dims, n_dims)
        d = shape.d
        ranks = [int(r) for r in payload["ranks"]]
        if kind == "cp":
            rank = ranks[0]
            gm = [_decode_array(arrays[f"gm{k}"], (m_dims[k], rank)) for k in range(d)]
            gn = [_decode_array(arrays[f"gn{k}"], (n_dims[k], rank)) for k in range(d)]
            weights = CPFactors(shape, rank, gm, gn)
        elif kind == "tucker":
            ranks = tuple(ranks)
            core = _decode_array(arrays["core"], ranks)
            gm = [_decode_array(arrays[f"gm{k}"], (m_dims[k], ranks[k])) for k in range(d)]
            gn = [_decode_array(arrays[f"gn{k}"], (n_dims[k], ranks[d + k])) for k in range(d)]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                weights = TuckerFactors(shape, ranks, core, gm, gn)
        elif kind == "tt":
            ranks = tuple(ranks)
            cores = [
                _decode_array(arrays[f"core{k}"], (ranks[k], m_dims[k], n_dims[k], ranks[k + 1]))
                for k in range(d)
            ]
            weights = TTCores(shape, ranks, cores)
        else:
            raise ConfigError(f"unknown operator kind {kind!r}")
    bias = None if payload["bias"] is None else _decode_array(payload["bias"], (weights.rows,))
    return FactorizedLinear(weights, bias)
