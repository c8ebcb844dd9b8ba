"""Adaptive Dormand-Prince 5(4) integration for small vector-valued ODEs.

The FHN system has a compiled integrator in :mod:`g2sym._kernels`; this one
serves right-hand sides given as Python callables.
"""

import numpy as np

from ._kernels import _A, _C, _B5 as _B, _E


class StepUnderflow(RuntimeError):
    """The step size fell below the resolvable limit."""

    def __init__(self, t, message):
        super().__init__(message)
        self.t = t


def dopri5(f, t0, y0, t_end, rtol=1e-10, atol=1e-10, h0=None, max_step=np.inf,
           max_steps=100000):
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t_end``.

    Returns node arrays ``(ts, ys, fs)``.  Exceptions raised by ``f`` propagate
    unless the step can be retried with a smaller size; a step-size underflow
    raises :class:`StepUnderflow` carrying the last accepted time.
    """
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    ts, ys = [t], [y.copy()]
    fy = np.asarray(f(t, y), dtype=float)
    fs = [fy.copy()]
    if span == 0.0:
        return np.array(ts), np.array(ys), np.array(fs)
    h = min(span, max_step, h0 if h0 is not None else 1e-3 * max(span, 1e-3))
    k = np.empty((7,) + y.shape)
    for _ in range(max_steps):
        if abs(t_end - t) <= 1e-15 * max(1.0, abs(t)):
            break
        h = min(h, abs(t_end - t), max_step)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepUnderflow(t, f"step size underflow at t = {t}")
        k[0] = fy
        try:
            for s in range(1, 7):
                ys_ = y + direction * h * np.tensordot(_A[s, :s], k[:s], axes=1)
                k[s] = f(t + direction * _C[s] * h, ys_)
            ok = np.all(np.isfinite(k))
        except (ArithmeticError, np.linalg.LinAlgError):
            ok = False
        if not ok:
            h *= 0.25
            continue
        y_new = y + direction * h * np.tensordot(_B, k, axes=1)
        err_vec = direction * h * np.tensordot(_E, k, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t += direction * h
            y = y_new
            fy = k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy.copy())
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h *= factor
    else:
        raise StepUnderflow(t, f"step limit reached at t = {t}")
    return np.array(ts), np.array(ys), np.array(fs)
