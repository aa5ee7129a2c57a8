"""Convex norm functionals on tables of L^q elements, with subgradients.

A table stacks elements along leading axes: sequence norms see
(items, atoms, *elem), process norms see (cells, atoms, *elem).  Gradients
use the convention df = Re <g, dU> on the complex entries, which is the
plain steepest-descent gradient in the underlying real coordinates.

Functionals:

  SeqS      ||(f_i)||_S     = || (sum_i E |f_i|^2)^(1/2) ||_q
  SeqD      ||(f_i)||_D     = ( sum_i E ||f_i||_q^p )^(1/p)
  ProcS     ||F||           = ( E || (sum_c lam_c |y_c|^2)^(1/2) ||_q^p )^(1/p)
  ProcDqq   ||F||           = ( E ( sum_c lam_c ||y_c||_q^q )^(p/q) )^(1/p)
  ProcDpq   ||F||           = ( sum_c lam_c E ||y_c||_q^p )^(1/p)

|.|^2 is x*x on the column side, xx* on the row side, and the pointwise
modulus squared in the commutative case.
"""

from __future__ import annotations

import numpy as np

from .lq import batch_norm_q
from .sumopt import NormFunctional

_EIG_FLOOR = 1e-30


def _elem_norms(U: np.ndarray, q: float, weights) -> np.ndarray:
    return batch_norm_q(U, q, weights)


def _elem_norm_grads(U: np.ndarray, q: float, weights) -> tuple[np.ndarray, np.ndarray]:
    """Batched (norms, gradients) of the element norm over trailing axes."""
    if weights is not None:
        mods = np.abs(U)
        pw = (weights * mods ** q).sum(axis=-1)
        vals = pw ** (1.0 / q)
        safe = np.where(vals > 0, vals, 1.0)
        # |x|^(q-2) x, with 0 at x = 0 (valid subgradient for q >= 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            core = np.where(mods > 0, mods ** (q - 2.0), 0.0) * U
        g = weights * core * (safe ** (1.0 - q))[..., None]
        g = np.where(vals[..., None] > 0, g, 0.0)
        return vals, g
    u, s, vh = np.linalg.svd(U, full_matrices=False)
    vals = (s ** q).sum(axis=-1) ** (1.0 / q)
    safe = np.where(vals > 0, vals, 1.0)
    core = s ** (q - 1.0)
    g = (u * core[..., None, :]) @ vh * (safe ** (1.0 - q))[..., None, None]
    g = np.where(vals[..., None, None] > 0, g, 0.0)
    return vals, g


def _gram(U: np.ndarray, side: str) -> np.ndarray:
    if side == "column":
        return np.swapaxes(U, -1, -2).conj() @ U
    return U @ np.swapaxes(U, -1, -2).conj()


def _psd_halfpower(M: np.ndarray, q: float) -> tuple[np.ndarray, np.ndarray]:
    """For PSD M: value ||M^(1/2)||_q and the factor V diag(l^(q/2-1)) V*.

    The factor enters every S-norm gradient; eigenvalues are clamped away
    from 0 so the q < 2 case stays finite (inexact subgradient near the
    nondifferentiable boundary, harmless for subgradient descent).
    """
    eig, vec = np.linalg.eigh(M)
    eig = np.clip(eig, 0.0, None)
    top = eig.max(axis=-1, keepdims=True)
    floor = np.maximum(top * 1e-15, _EIG_FLOOR)
    val = (eig ** (q / 2.0)).sum(axis=-1) ** (1.0 / q)
    eig_safe = np.maximum(eig, floor)
    core = eig_safe ** (q / 2.0 - 1.0)
    fac = (vec * core[..., None, :]) @ np.swapaxes(vec, -1, -2).conj()
    return val, fac


class SeqS(NormFunctional):
    """Square-function norm of a sequence: ||(sum_i E |f_i|^2)^(1/2)||_q."""

    def __init__(self, q: float, side: str, probs: np.ndarray, weights=None):
        self.q, self.side, self.probs, self.weights = q, side, np.asarray(probs), weights

    def _second_moment(self, U):
        if self.weights is not None:
            sq = np.abs(U) ** 2
            return np.einsum("a,iax->x", self.probs, sq)
        return np.einsum("a,iaxy->xy", self.probs, _gram(U, self.side))

    def value(self, U):
        M = self._second_moment(U)
        if self.weights is not None:
            return float((self.weights * M ** (self.q / 2.0)).sum() ** (1.0 / self.q))
        val, _ = _psd_halfpower(M, self.q)
        return float(val)

    def value_grad(self, U):
        q = self.q
        M = self._second_moment(U)
        if self.weights is not None:
            val = float((self.weights * M ** (q / 2.0)).sum() ** (1.0 / q))
            if val == 0.0:
                return 0.0, np.zeros_like(U)
            floor = max(M.max() * 1e-15, _EIG_FLOOR)
            core = self.weights * np.maximum(M, floor) ** (q / 2.0 - 1.0)
            g = val ** (1.0 - q) * self.probs[None, :, None] * core[None, None, :] * U
            return val, g
        val, fac = _psd_halfpower(M, q)
        val = float(val)
        if val == 0.0:
            return 0.0, np.zeros_like(U)
        if self.side == "column":
            g = val ** (1.0 - q) * self.probs[None, :, None, None] * (U @ fac)
        else:
            g = val ** (1.0 - q) * self.probs[None, :, None, None] * (fac @ U)
        return val, g


class SeqD(NormFunctional):
    """(sum_i E ||f_i||_q^p)^(1/p) on a sequence table."""

    def __init__(self, p: float, q: float, probs: np.ndarray, weights=None):
        self.p, self.q, self.probs, self.weights = p, q, np.asarray(probs), weights

    def value(self, U):
        a = _elem_norms(U, self.q, self.weights)
        return float((self.probs * a ** self.p).sum() ** (1.0 / self.p))

    def value_grad(self, U):
        p = self.p
        a, ga = _elem_norm_grads(U, self.q, self.weights)
        val = float((self.probs * a ** p).sum() ** (1.0 / p))
        if val == 0.0:
            return 0.0, np.zeros_like(U)
        coef = val ** (1.0 - p) * self.probs * a ** (p - 1.0)
        g = coef.reshape(coef.shape + (1,) * (U.ndim - 2)) * ga
        return val, g


class ProcS(NormFunctional):
    """(E || (sum_c lam_c |y_c|^2)^(1/2) ||_q^p)^(1/p) on a process table."""

    def __init__(self, p: float, q: float, side: str, lam: np.ndarray,
                 probs: np.ndarray, weights=None):
        self.p, self.q, self.side = p, q, side
        self.lam, self.probs, self.weights = np.asarray(lam), np.asarray(probs), weights

    def _per_atom(self, U):
        if self.weights is not None:
            sq = np.abs(U) ** 2
            m = np.einsum("c,cax->ax", self.lam, sq)
            b = (self.weights * m ** (self.q / 2.0)).sum(axis=-1) ** (1.0 / self.q)
            return b, m
        M = np.einsum("c,caxy->axy", self.lam, _gram(U, self.side))
        b, fac = _psd_halfpower(M, self.q)
        return b, (M, fac)

    def value(self, U):
        b, _ = self._per_atom(U)
        return float((self.probs * b ** self.p).sum() ** (1.0 / self.p))

    def value_grad(self, U):
        p, q = self.p, self.q
        b, aux = self._per_atom(U)
        val = float((self.probs * b ** p).sum() ** (1.0 / p))
        if val == 0.0:
            return 0.0, np.zeros_like(U)
        safe_b = np.where(b > 0, b, 1.0)
        outer = val ** (1.0 - p) * self.probs * b ** (p - 1.0)      # dval/db per atom
        inner = np.where(b > 0, outer * safe_b ** (1.0 - q), 0.0)
        if self.weights is not None:
            m = aux
            floor = np.maximum(m.max(axis=-1, keepdims=True) * 1e-15, _EIG_FLOOR)
            core = self.weights * np.maximum(m, floor) ** (q / 2.0 - 1.0)
            g = inner[None, :, None] * self.lam[:, None, None] * core[None, :, :] * U
            return val, g
        _, fac = aux
        scaled = inner[None, :, None, None] * self.lam[:, None, None, None]
        if self.side == "column":
            g = scaled * (U @ fac[None, ...])
        else:
            g = scaled * (fac[None, ...] @ U)
        return val, g


class ProcDqq(NormFunctional):
    """(E (sum_c lam_c ||y_c||_q^q)^(p/q))^(1/p) on a process table."""

    def __init__(self, p: float, q: float, lam: np.ndarray, probs: np.ndarray, weights=None):
        self.p, self.q = p, q
        self.lam, self.probs, self.weights = np.asarray(lam), np.asarray(probs), weights

    def value(self, U):
        a = _elem_norms(U, self.q, self.weights)
        inner = (self.lam[:, None] * a ** self.q).sum(axis=0)
        return float((self.probs * inner ** (self.p / self.q)).sum() ** (1.0 / self.p))

    def value_grad(self, U):
        p, q = self.p, self.q
        a, ga = _elem_norm_grads(U, self.q, self.weights)
        inner = (self.lam[:, None] * a ** q).sum(axis=0)
        val = float((self.probs * inner ** (p / q)).sum() ** (1.0 / p))
        if val == 0.0:
            return 0.0, np.zeros_like(U)
        safe = np.where(inner > 0, inner, 1.0)
        datom = np.where(inner > 0,
                         val ** (1.0 - p) * self.probs * safe ** (p / q - 1.0), 0.0)
        coef = datom[None, :] * self.lam[:, None] * a ** (q - 1.0)
        g = coef.reshape(coef.shape + (1,) * (U.ndim - 2)) * ga
        return val, g


class ProcDpq(NormFunctional):
    """(sum_c lam_c E ||y_c||_q^p)^(1/p) on a process table."""

    def __init__(self, p: float, q: float, lam: np.ndarray, probs: np.ndarray, weights=None):
        self.p, self.q = p, q
        self.lam, self.probs, self.weights = np.asarray(lam), np.asarray(probs), weights

    def value(self, U):
        a = _elem_norms(U, self.q, self.weights)
        return float((self.lam[:, None] * self.probs[None, :] * a ** self.p).sum() ** (1.0 / self.p))

    def value_grad(self, U):
        p = self.p
        a, ga = _elem_norm_grads(U, self.q, self.weights)
        val = float((self.lam[:, None] * self.probs[None, :] * a ** p).sum() ** (1.0 / p))
        if val == 0.0:
            return 0.0, np.zeros_like(U)
        coef = val ** (1.0 - p) * self.lam[:, None] * self.probs[None, :] * a ** (p - 1.0)
        g = coef.reshape(coef.shape + (1,) * (U.ndim - 2)) * ga
        return val, g
