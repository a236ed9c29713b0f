"""Ground-truth ridge regression: closed form, gradient descent, prediction.

This is the oracle the attention pipelines are checked against. The descent
recurrence is

    w_t = w_{t-1} - eta * dw_{t-1},
    dw_{t-1} = -X^T y + X^T (X w_{t-1}) + lam * w_{t-1},

with the X^T (X w) association fixed so pipeline and oracle differ only by
floating-point summation order.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .matrix import DimensionMismatch, Matrix, ShapeMismatch


class SingularSystem(ArithmeticError):
    """The normal-equations matrix has a pivot below tolerance."""


class BadProblemFile(ValueError):
    """A problem JSON file is malformed."""


@dataclass(frozen=True)
class RidgeProblem:
    """One ridge regression instance.

    x is the n-by-d design (rows are the examples), y the n-by-1 targets,
    u the d-by-1 query point. A constant term, if wanted, must be supplied
    by the caller as a column of ones in x.
    """

    x: Matrix
    y: Matrix
    u: Matrix
    lam: float
    eta: float
    steps: int
    w0: Matrix

    def __post_init__(self):
        n, d = self.x.shape
        if self.y.shape != (n, 1):
            raise ShapeMismatch(f"y must be {n}x1, got {self.y.shape}")
        if self.u.shape != (d, 1):
            raise ShapeMismatch(f"u must be {d}x1, got {self.u.shape}")
        if self.w0.shape != (d, 1):
            raise ShapeMismatch(f"w0 must be {d}x1, got {self.w0.shape}")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"ridge parameter must be >= 0, got {self.lam}")
        # eta = 0 is admitted so a frozen-coefficient run is expressible.
        if not (np.isfinite(self.eta) and self.eta >= 0):
            raise ValueError(f"learning rate must be >= 0, got {self.eta}")
        if self.steps < 0:
            raise ValueError(f"step count must be >= 0, got {self.steps}")

    @property
    def n(self) -> int:
        return self.x.rows

    @property
    def d(self) -> int:
        return self.x.cols


@dataclass(frozen=True)
class GdState:
    """Iterate index t, current coefficients w, and the last update direction."""

    t: int
    w: Matrix
    delta: Optional[Matrix] = None


def make_problem(
    x: Matrix,
    y: Matrix,
    u: Matrix,
    lam: float,
    eta: float | str = "auto",
    steps: int = 0,
    w0: Matrix | str = "zero",
) -> RidgeProblem:
    """Build a problem, resolving eta="auto" and w0="zero" conventions."""
    d = x.cols
    if isinstance(w0, str):
        if w0 != "zero":
            raise BadProblemFile(f"unknown w0 spec {w0!r}")
        w0 = Matrix.from_array(np.zeros((d, 1)))
    if isinstance(eta, str):
        if eta != "auto":
            raise BadProblemFile(f"unknown eta spec {eta!r}")
        eta = stable_eta_for(x, lam)
    return RidgeProblem(x=x, y=y, u=u, lam=lam, eta=float(eta), steps=steps, w0=w0)


def ridge_closed_form(p: RidgeProblem) -> Matrix:
    """Solve (X^T X + lam I) w = X^T y by a partial-pivot dense factorization."""
    xt = p.x.array.T
    f = xt @ p.x.array + p.lam * np.eye(p.d)
    b = xt @ p.y.array
    with warnings.catch_warnings():
        # the explicit pivot check below covers the singular case
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(f, check_finite=False)
    pivots = np.abs(np.diag(lu))
    tol = np.finfo(np.float64).eps * max(1.0, float(np.max(pivots, initial=0.0))) * p.d
    if np.min(pivots) <= tol:
        raise SingularSystem(
            f"normal equations pivot {np.min(pivots):.3e} below tolerance {tol:.3e}"
        )
    return Matrix.from_array(scipy.linalg.lu_solve((lu, piv), b, check_finite=False))


def gradient(p: RidgeProblem, w: Matrix) -> Matrix:
    """dw = -X^T y + X^T (X w) + lam w."""
    x, w_arr = p.x.array, w.array
    dw = -(x.T @ p.y.array) + x.T @ (x @ w_arr) + p.lam * w_arr
    return Matrix.from_array(dw)


def gd_step(p: RidgeProblem, s: GdState) -> GdState:
    """One batch update from state s."""
    if s.t >= p.steps:
        raise ValueError(f"state already at final iteration {s.t}")
    delta = gradient(p, s.w)
    w_next = Matrix.from_array(s.w.array - p.eta * delta.array)
    return GdState(t=s.t + 1, w=w_next, delta=delta)


def gd_run(p: RidgeProblem) -> tuple[GdState, list[Matrix]]:
    """Apply the update p.steps times from w0; trace holds w_0 .. w_T."""
    state = GdState(t=0, w=p.w0)
    trace = [p.w0]
    for _ in range(p.steps):
        state = gd_step(p, state)
        trace.append(state.w)
    return state, trace


def stable_eta_for(x: Matrix, lam: float) -> float:
    """eta = 1 / (sigma_max(X)^2 + lam), sigma_max estimated by power iteration.

    Guarantees the descent map contracts: every eigenvalue of
    I - eta (X^T X + lam I) lies in (-1, 1] with equality only for a
    zero eigendirection at lam = 0.
    """
    g = x.array.T @ x.array
    d = g.shape[0]
    # Deterministic, non-symmetric start so no eigendirection is missed
    # by accident of symmetry.
    v = 1.0 + np.arange(d) / max(1, d)
    v /= np.linalg.norm(v)
    lam_max = 0.0
    for _ in range(500):
        gv = g @ v
        norm = np.linalg.norm(gv)
        if norm == 0.0:
            lam_max = 0.0
            break
        new_est = float(v @ gv)
        v = gv / norm
        if abs(new_est - lam_max) <= 1e-13 * max(1.0, abs(new_est)):
            lam_max = new_est
            break
        lam_max = new_est
    denom = lam_max + lam
    if denom <= 0.0:
        raise SingularSystem("X^T X + lam I has no positive spectrum; eta undefined")
    return 1.0 / denom


def stable_eta(p: RidgeProblem) -> float:
    return stable_eta_for(p.x, p.lam)


def predict(w: Matrix, u: Matrix) -> float:
    """Scalar prediction u^T w."""
    if w.shape != u.shape or w.cols != 1:
        raise DimensionMismatch(f"need matching column vectors, got {w.shape}, {u.shape}")
    return float(u.array[:, 0] @ w.array[:, 0])


def ridge_cost(p: RidgeProblem, w: Matrix) -> float:
    """The regularized cost 0.5 ||y - X w||^2 + 0.5 lam ||w||^2."""
    r = p.y.array - p.x.array @ w.array
    return 0.5 * float(r[:, 0] @ r[:, 0]) + 0.5 * p.lam * float(
        w.array[:, 0] @ w.array[:, 0]
    )


def problem_to_json(p: RidgeProblem) -> str:
    doc = {
        "X": p.x.array.tolist(),
        "y": p.y.array[:, 0].tolist(),
        "u": p.u.array[:, 0].tolist(),
        "lambda": p.lam,
        "eta": p.eta,
        "steps": p.steps,
        "w0": p.w0.array[:, 0].tolist(),
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def problem_from_json(text: str) -> RidgeProblem:
    """Parse {"X", "y", "u", "lambda", "eta": f|"auto", "steps", "w0": [...]|"zero"}."""
    try:
        doc = json.loads(text)
        x = Matrix(doc["X"])
        y = Matrix.column(doc["y"])
        u = Matrix.column(doc["u"])
        lam = float(doc["lambda"])
        steps = int(doc["steps"])
        eta = doc.get("eta", "auto")
        w0 = doc.get("w0", "zero")
        if not isinstance(w0, str):
            w0 = Matrix.column(w0)
        if not isinstance(eta, str):
            eta = float(eta)
        return make_problem(x, y, u, lam, eta=eta, steps=steps, w0=w0)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise BadProblemFile(f"malformed ridge problem: {exc}") from exc


def load_problem(path: str) -> RidgeProblem:
    with open(path) as fh:
        return problem_from_json(fh.read())


def with_steps(p: RidgeProblem, steps: int) -> RidgeProblem:
    """Copy of p with a different iteration budget."""
    return replace(p, steps=steps)
