"""Thin linear-programming layer.

Everything geometric in this package funnels through :func:`maximize`:
solve ``max c.x`` subject to ``A x <= b`` with free variables (optional
equalities and bounds for the deviation programs).  Any backend with
that contract could be swapped in; the implementation wraps
``scipy.optimize.linprog`` (HiGHS), which is deterministic for fixed
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import LPSolverError

FEASIBILITY_TOL = 1e-8

_STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}
_BACKEND_OPTIONS: dict = {}


def set_feasibility_tolerance(tol: float) -> None:
    """Tune the backend's primal/dual feasibility tolerances process-wide."""
    if tol <= 0:
        raise LPSolverError("feasibility tolerance must be positive")
    _BACKEND_OPTIONS["primal_feasibility_tolerance"] = tol
    _BACKEND_OPTIONS["dual_feasibility_tolerance"] = tol


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None
    value: float | None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def maximize(c, a_ub, b_ub, a_eq=None, b_eq=None, bounds=None) -> LPResult:
    """Solve ``max c.x  s.t.  a_ub x <= b_ub`` (plus optional equalities).

    Variables are free unless ``bounds`` (a list of ``(lo, hi)`` pairs,
    ``None`` meaning unbounded) says otherwise.
    """
    c = np.asarray(c, dtype=float)
    a_ub = np.asarray(a_ub, dtype=float)
    b_ub = np.asarray(b_ub, dtype=float)
    if a_ub.ndim != 2 or a_ub.shape[0] != b_ub.shape[0]:
        raise LPSolverError("inequality system shapes disagree")
    if bounds is None:
        bounds = (None, None)
    res = linprog(-c, A_ub=a_ub if a_ub.size else None,
                  b_ub=b_ub if a_ub.size else None,
                  A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs",
                  options=dict(_BACKEND_OPTIONS) or None)
    status = _STATUS.get(res.status)
    if status is None:
        raise LPSolverError(f"LP backend failed: {res.message}")
    if status != "optimal":
        return LPResult(status=status, x=None, value=None)
    return LPResult(status="optimal", x=np.asarray(res.x), value=float(-res.fun))
