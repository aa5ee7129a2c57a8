"""Subgradient machinery for infimal-convolution (sum) norms.

The sum norm ||z||_{X_1+...+X_k} = inf { sum_j N_j(x_j) : sum_j x_j = z } is
minimized over decompositions by projected-free subgradient descent with
Polyak-style steps and seeded random restarts.  Every component functional is
a norm of an affine image of the variables, so the objective is convex; the
returned value is always an upper bound on the infimum (any feasible
decomposition certifies one).

Targets are normalized by a power of two before optimizing, which makes the
reported value exactly positively homogeneous under power-of-two scalings of
the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .prob import philox


class OptimizerError(RuntimeError):
    def __init__(self, message: str, best_value: float):
        super().__init__(message)
        self.best_value = best_value


class NormFunctional:
    """Interface: a convex positively homogeneous functional of a complex table."""

    def value(self, table: np.ndarray) -> float:
        raise NotImplementedError

    def value_grad(self, table: np.ndarray) -> tuple[float, np.ndarray]:
        """Returns (value, g) with df = Re <g, dTable>."""
        raise NotImplementedError


class MaxFunctional(NormFunctional):
    """Pointwise max of component functionals (intersection norm)."""

    def __init__(self, parts: list[NormFunctional]):
        self.parts = parts

    def value(self, table):
        return max(p.value(table) for p in self.parts)

    def value_grad(self, table):
        best_v, best_g = -math.inf, None
        for p in self.parts:
            v, g = p.value_grad(table)
            if best_g is None or v > best_v:
                best_v, best_g = v, g
        return best_v, best_g


@dataclass(eq=False)
class DecompositionResult:
    value: float
    parts: list[np.ndarray]
    iterations: int
    converged: bool


def _pow2_scale(x: float) -> float:
    """Largest power of two <= x (1.0 for x <= 0); division by it is exact."""
    if x <= 0 or not math.isfinite(x):
        return 1.0
    return 2.0 ** math.floor(math.log2(x))


def minimize_decomposition(target: np.ndarray, funcs: list[NormFunctional], *,
                           restarts: int = 8, max_iter: int = 5000,
                           rel_tol: float = 1e-7, seed: int = 0) -> DecompositionResult:
    """Minimize sum_j funcs[j](x_j) subject to sum_j x_j = target."""
    target = np.asarray(target, dtype=complex)
    k = len(funcs)
    if k == 1:
        return DecompositionResult(funcs[0].value(target), [target], 0, True)
    amax = float(np.abs(target).max()) if target.size else 0.0
    if amax == 0.0:
        return DecompositionResult(0.0, [np.zeros_like(target) for _ in range(k)], 0, True)
    scale = _pow2_scale(amax)
    z = target / scale

    def objective(X):
        last = z - X.sum(axis=0)
        total = 0.0
        grads = np.empty_like(X)
        v_last, g_last = funcs[-1].value_grad(last)
        total += v_last
        for j in range(k - 1):
            v, g = funcs[j].value_grad(X[j])
            total += v
            grads[j] = g - g_last
        return total, grads

    # corner candidates: all mass assigned to a single summand
    corner_vals = [funcs[j].value(z) for j in range(k)]
    best_corner = int(np.argmin(corner_vals))
    f_best = corner_vals[best_corner]
    X_best = np.zeros((k - 1,) + z.shape, dtype=complex)
    if best_corner < k - 1:
        X_best[best_corner] = z

    total_iters = 0
    converged = False
    for r in range(restarts):
        if r == 0:
            X = X_best.copy()
        else:
            gen = philox(seed, 1000 + r)
            w = gen.random(k)
            w /= w.sum()
            noise_scale = 0.25 * float(np.abs(z).mean())
            X = np.empty((k - 1,) + z.shape, dtype=complex)
            for j in range(k - 1):
                noise = gen.standard_normal(z.shape) + 1j * gen.standard_normal(z.shape)
                X[j] = w[j] * z + noise_scale * noise
        f_run_best = math.inf
        X_run_best = X.copy()
        gap = 0.2
        stall = 0
        it = 0
        while it < max_iter:
            with np.errstate(all="ignore"):
                f, g = objective(X)
            total_iters += 1
            it += 1
            if not math.isfinite(f):
                X = X_run_best.copy()
                gap *= 0.5
                if gap < rel_tol:
                    break
                continue
            improved = (not math.isfinite(f_run_best)
                        or f < f_run_best - rel_tol * abs(f_run_best))
            if improved:
                f_run_best, X_run_best, stall = f, X.copy(), 0
            else:
                stall += 1
            if stall > 30:
                gap *= 0.5
                stall = 0
                X = X_run_best.copy()
                if gap < rel_tol:
                    converged = True
                    break
                continue
            gnorm2 = float((np.abs(g) ** 2).sum())
            if gnorm2 <= 1e-24 * max(f, 1e-12) ** 2:
                converged = True
                break
            if not np.all(np.isfinite(g)):
                X = X_run_best.copy()
                gap *= 0.5
                if gap < rel_tol:
                    break
                continue
            step = (f - f_run_best * (1.0 - gap)) / gnorm2
            # keep iterates bounded; the Polyak step can blow up on flat spots
            limit = 2.0 * max(1.0, float(np.abs(X).max()))
            slen = step * math.sqrt(gnorm2)
            if slen > limit:
                step = limit / math.sqrt(gnorm2)
            with np.errstate(all="ignore"):
                X = X - step * g
        if f_run_best < f_best:
            f_best, X_best = f_run_best, X_run_best
    if not math.isfinite(f_best):
        raise OptimizerError("sum-norm optimizer failed to produce a finite value",
                             best_value=f_best)
    parts = [X_best[j] * scale for j in range(k - 1)]
    parts.append(target - sum(parts))
    return DecompositionResult(f_best * scale, parts, total_iters, converged)
