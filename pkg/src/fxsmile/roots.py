"""Bracketing root finders.

``bracket_solve`` is a vectorised Illinois/bisection hybrid used wherever many
independent scalar equations have to be solved at once (delta-implicit smile
lookups on strike grids). Scalar strike solving goes through :func:`brent`.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, NoRoot

MAX_ITER = 100


def bracket_solve(fn, lo, hi, *, xtol=1e-15, ftol=1e-15, max_iter=MAX_ITER):
    """Solve ``fn(x) = 0`` elementwise on ``[lo, hi]``.

    ``fn`` maps an array of abscissae to an array of values. Each element must
    have a sign change (or a zero) on its bracket, otherwise :class:`NoRoot` is
    raised. Illinois false-position steps are used while they shrink the bracket
    fast enough; a bisection step is forced otherwise, so the iteration count
    is bounded by roughly ``log2((hi - lo) / xtol)``.
    """
    a = np.array(lo, dtype=float, ndmin=1)
    b = np.array(hi, dtype=float, ndmin=1)
    a, b = np.broadcast_arrays(a, b)
    a, b = a.copy(), b.copy()
    fa = np.asarray(fn(a), dtype=float).copy()
    fb = np.asarray(fn(b), dtype=float).copy()
    if np.any(np.isnan(fa) | np.isnan(fb)):
        raise NoRoot("objective undefined at bracket end")
    if np.any(fa * fb > 0):
        raise NoRoot("no sign change on bracket")

    x = np.where(np.abs(fa) <= np.abs(fb), a, b)
    fx = np.where(np.abs(fa) <= np.abs(fb), fa, fb)
    done = (fa == 0) | (fb == 0)
    side = np.zeros(a.shape, dtype=int)
    width = b - a
    for _ in range(max_iter):
        done |= (np.abs(b - a) <= xtol * np.maximum(1.0, np.abs(x))) | (np.abs(fx) <= ftol)
        if done.all():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            c = (a * fb - b * fa) / (fb - fa)
        mid = 0.5 * (a + b)
        slow = np.abs(b - a) > 0.5 * width
        use_mid = ~np.isfinite(c) | (c <= np.minimum(a, b)) | (c >= np.maximum(a, b)) | slow
        c = np.where(use_mid, mid, c)
        width = np.abs(b - a)
        c = np.where(done, x, c)
        fc = np.asarray(fn(c), dtype=float)
        if np.any(np.isnan(fc) & ~done):
            raise NoRoot("objective undefined inside bracket")
        left = (fa * fc < 0) & ~done
        right = ~left & ~done & (fc != 0)
        # Illinois: halve the stale endpoint value when one side keeps moving.
        fa_new = np.where(right, fc, np.where(left & (side == -1), 0.5 * fa, fa))
        fb_new = np.where(left, fc, np.where(right & (side == 1), 0.5 * fb, fb))
        a = np.where(right, c, a)
        b = np.where(left, c, b)
        fa, fb = fa_new, fb_new
        side = np.where(left, -1, np.where(right, 1, side))
        x = np.where(done, x, c)
        fx = np.where(done, fx, fc)
        done |= fc == 0
    else:
        done |= (np.abs(b - a) <= xtol * np.maximum(1.0, np.abs(x))) | (np.abs(fx) <= ftol)
        if not done.all():
            raise ConvergenceError(f"bracketing solver exhausted {max_iter} iterations")
    return x


def brent(fn, lo: float, hi: float, *, xtol: float = 1e-15, max_iter: int = MAX_ITER) -> float:
    """Scalar Brent solve; exhaustion of ``max_iter`` raises instead of returning."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
        raise NoRoot(f"no sign change on [{lo!r}, {hi!r}]")
    try:
        return brentq(fn, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc)) from exc
