"""Pure-numpy contraction primitives (fallback backend).

These are the hot kernels of the factorized matrix-vector products and
their reverse-mode adjoints. The compiled extension ``_kernels`` exposes
the exact same functions; ``tensorcells.backend`` picks one at import.

Axis conventions (all arrays C-contiguous float64):
    b  batch            r/s  rank axes
    j  contracted mode  i    produced mode
    t  flattened tail   p/q  flattened leading/trailing blocks
"""

import numpy as np

__all__ = [
    "rank_contract_init",
    "rank_contract",
    "rank_expand",
    "rank_expand_adj",
    "rank_expand_adj_nr",
    "rank_outer",
    "rank_outer_nr",
    "rank_reduce",
    "mode_contract",
    "mode_outer",
    "tt_apply_step",
    "tt_grad_core",
    "tt_grad_input",
]


def rank_contract_init(s, m):
    """(B,J,T),(J,R) -> (B,T,R): out[b,t,r] = sum_j s[b,j,t] m[j,r]."""
    return np.einsum("bjt,jr->btr", s, m)


def rank_contract(s, m):
    """(B,J,T,R),(J,R) -> (B,T,R): out[b,t,r] = sum_j s[b,j,t,r] m[j,r]."""
    return np.einsum("bjtr,jr->btr", s, m)


def rank_expand(m, e):
    """(I,R),(B,T,R) -> (B,I,T,R): out[b,i,t,r] = m[i,r] e[b,t,r]."""
    return np.einsum("ir,btr->bitr", m, e)


def rank_expand_adj(m, d):
    """(I,R),(B,I,T,R) -> (B,T,R): out[b,t,r] = sum_i m[i,r] d[b,i,t,r]."""
    return np.einsum("ir,bitr->btr", m, d)


def rank_expand_adj_nr(m, d):
    """(I,R),(B,I,T) -> (B,T,R): out[b,t,r] = sum_i m[i,r] d[b,i,t]."""
    return np.einsum("ir,bit->btr", m, d)


def rank_outer(a, d):
    """(B,J,T,R),(B,T,R) -> (J,R): out[j,r] = sum_{b,t} a[b,j,t,r] d[b,t,r]."""
    return np.einsum("bjtr,btr->jr", a, d)


def rank_outer_nr(a, d):
    """(B,J,T),(B,T,R) -> (J,R): out[j,r] = sum_{b,t} a[b,j,t] d[b,t,r]."""
    return np.einsum("bjt,btr->jr", a, d)


def rank_reduce(m, d):
    """(J,R),(B,T,R) -> (B,J,T): out[b,j,t] = sum_r m[j,r] d[b,t,r]."""
    return np.einsum("jr,btr->bjt", m, d)


def mode_contract(s, m):
    """(B,P,J,Q),(J,R) -> (B,P,R,Q): out[b,p,r,q] = sum_j s[b,p,j,q] m[j,r]."""
    return np.einsum("bpjq,jr->bprq", s, m)


def mode_outer(s, d):
    """(B,P,J,Q),(B,P,R,Q) -> (J,R): out[j,r] = sum_{b,p,q} s[b,p,j,q] d[b,p,r,q]."""
    return np.einsum("bpjq,bprq->jr", s, d)


def tt_apply_step(a, g):
    """(B,P,J,Q,S),(S,I,J,R) -> (B,P,I,Q,R): contract one tensor-train core.

    out[b,p,i,q,r] = sum_{j,s} a[b,p,j,q,s] g[s,i,j,r]
    """
    return np.einsum("bpjqs,sijr->bpiqr", a, g)


def tt_grad_core(a, d):
    """(B,P,J,Q,S),(B,P,I,Q,R) -> (S,I,J,R): core adjoint of tt_apply_step."""
    return np.einsum("bpjqs,bpiqr->sijr", a, d)


def tt_grad_input(g, d):
    """(S,I,J,R),(B,P,I,Q,R) -> (B,P,J,Q,S): input adjoint of tt_apply_step."""
    return np.einsum("sijr,bpiqr->bpjqs", g, d)
