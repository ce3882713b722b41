"""Box-constrained Gauss-Newton / Levenberg-Marquardt least squares."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import FxSmileError

DEFAULT_MAX_ITER = 200


def max_iter_default() -> int:
    """Iteration cap, overridable through ``FXSMILE_MAX_ITER``."""
    raw = os.environ.get("FXSMILE_MAX_ITER")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            return DEFAULT_MAX_ITER
        if value > 0:
            return value
    return DEFAULT_MAX_ITER


@dataclass(frozen=True)
class LsqResult:
    x: np.ndarray
    residuals: np.ndarray
    converged: bool
    iterations: int
    message: str

    @property
    def cost(self) -> float:
        return 0.5 * float(self.residuals @ self.residuals)


def _safe_eval(fun, x):
    try:
        r = np.asarray(fun(x), dtype=float)
    except (FxSmileError, FloatingPointError, ZeroDivisionError, OverflowError):
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def forward_jacobian(fun, x, r, lower, upper, step):
    """One-sided differences, stepping away from an active upper bound."""
    jac = np.empty((r.size, x.size))
    for j in range(x.size):
        h = step * max(1.0, abs(x[j]))
        if x[j] + h > upper[j]:
            h = -h
        xp = x.copy()
        xp[j] += h
        rp = _safe_eval(fun, xp)
        if rp is None:
            xp[j] = x[j] - h
            rp = _safe_eval(fun, xp)
            if rp is None:
                return None
            h = -h
        jac[:, j] = (rp - r) / h
    return jac


def least_squares_solve(
    fun,
    x0,
    lower=None,
    upper=None,
    *,
    jac=None,
    fd_step: float = 1e-6,
    max_iter: int | None = None,
    step_tol: float = 1e-10,
    improvement_tol: float = 1e-12,
) -> LsqResult:
    """Minimise ``0.5 * ||fun(x)||^2`` over the box ``[lower, upper]``.

    Each iteration first tries the undamped Gauss-Newton step; Marquardt
    damping is switched on (and grown) only after a rejected step. Variables
    pinned at a bound with the gradient pointing outward are frozen for the
    step. Trial points where ``fun`` raises a library error or returns
    non-finite values are treated as rejected steps. Accepted costs are
    non-increasing by construction.
    """
    x = np.array(x0, dtype=float)
    n = x.size
    lower = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    upper = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    x = np.clip(x, lower, upper)
    max_iter = max_iter_default() if max_iter is None else max_iter

    r = _safe_eval(fun, x)
    if r is None:
        return LsqResult(x, np.full(1, np.nan), False, 0, "residual not finite at initial point")
    norm = float(np.linalg.norm(r))
    lam = 0.0
    it = 0
    while it < max_iter:
        if norm == 0.0:
            return LsqResult(x, r, True, it, "zero residual")
        it += 1
        J = jac(x) if jac is not None else forward_jacobian(fun, x, r, lower, upper, fd_step)
        if J is None:
            return LsqResult(x, r, False, it, "jacobian not finite")
        g = J.T @ r
        free = ~(((x <= lower) & (g > 0)) | ((x >= upper) & (g < 0)))
        if not free.any():
            return LsqResult(x, r, True, it, "all variables at active bounds")
        Jf = J[:, free]
        A = Jf.T @ Jf
        diag = np.maximum(np.diag(A), 1e-12 * max(1.0, float(np.max(np.diag(A)))))
        accepted = False
        while True:
            try:
                step_free = np.linalg.solve(A + lam * np.diag(diag), -g[free])
            except np.linalg.LinAlgError:
                step_free = None
            if step_free is not None and np.all(np.isfinite(step_free)):
                trial = x.copy()
                trial[free] += step_free
                trial = np.clip(trial, lower, upper)
                step = trial - x
                tiny = float(np.linalg.norm(step)) <= step_tol * (1.0 + float(np.linalg.norm(x)))
                r_trial = _safe_eval(fun, trial)
                improved = r_trial is not None and float(np.linalg.norm(r_trial)) < norm
                if tiny:
                    # keep a tiny step only if it helps, then stop
                    if improved:
                        x, r = trial, r_trial
                    return LsqResult(x, r, True, it, "step below tolerance")
                if improved:
                    norm_trial = float(np.linalg.norm(r_trial))
                    accepted = True
                    break
            lam = max(lam * 10.0, 1e-3)
            if lam > 1e16:
                return LsqResult(x, r, True, it, "no descent step found")
        improvement = norm - norm_trial
        x, r, norm = trial, r_trial, norm_trial
        lam = 0.0 if lam <= 1e-9 else lam / 10.0
        if accepted and improvement < improvement_tol:
            return LsqResult(x, r, True, it, "residual norm stalled")
    return LsqResult(x, r, False, it, f"iteration cap {max_iter} reached")
