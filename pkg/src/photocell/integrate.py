"""Sampled solutions of small ODE systems on top of ``scipy.integrate.solve_ivp``."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

#: Dormand-Prince 5(4); explicit and adequate for the mild stiffness of the rate equations.
METHOD = "RK45"


class IntegrationError(RuntimeError):
    """The solver gave up; ``t`` and ``y`` hold the last good state."""

    def __init__(self, message: str, t: float, y: np.ndarray):
        super().__init__(f"{message} (last good state at t={t:.6g})")
        self.t = t
        self.y = y


def integrate_samples(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_eval: np.ndarray,
    atol: float = 1e-12,
    rtol: float = 1e-10,
    callback: Optional[Callable[[float, np.ndarray], None]] = None,
) -> np.ndarray:
    """Integrate ``y' = f(t, y)`` and return ``y`` at each time in ``t_eval``.

    ``t_eval`` must be increasing and start at the initial time. Row ``i``
    of the result is the state at ``t_eval[i]``. ``callback(t, y)`` is
    called on every sample in order and may raise to reject the run.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or len(t_eval) == 0:
        raise ValueError("t_eval must be a non-empty 1-D array")
    if np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be strictly increasing")
    y0 = np.asarray(y0)
    if len(t_eval) == 1:
        samples = y0[np.newaxis].copy()
    else:
        sol = solve_ivp(f, (t_eval[0], t_eval[-1]), y0, method=METHOD, dense_output=True, atol=atol, rtol=rtol)
        if not sol.success:
            raise IntegrationError(sol.message, float(sol.t[-1]), sol.y[:, -1])
        samples = sol.sol(t_eval).T.astype(y0.dtype, copy=False)
        samples[0] = y0
    if callback is not None:
        for t, y in zip(t_eval, samples):
            callback(float(t), y)
    return samples
