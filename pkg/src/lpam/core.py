"""Core domain types: two-block iterates and the smoothed objective contract.

Everything downstream (solver, diagnostics, CLI) works against the
``SmoothedObjective`` interface defined here; the bundled instantiations
live in :mod:`lpam.objectives`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class NumericError(RuntimeError):
    """A solver-fatal non-finite value was produced, named by its source."""


@dataclass(frozen=True)
class TwoBlockPoint:
    """The iterate X = (x1, x2), two real vectors of fixed lengths.

    For the joint-recovery instantiation both blocks have length
    height*width and are row-major flattenings of images.
    """

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=np.float64))
        object.__setattr__(self, "x2", np.asarray(self.x2, dtype=np.float64))
        if self.x1.ndim != 1 or self.x2.ndim != 1:
            raise ValueError("blocks must be 1-d vectors")

    @property
    def n(self) -> int:
        return self.x1.size

    @property
    def m(self) -> int:
        return self.x2.size

    def copy(self) -> "TwoBlockPoint":
        return TwoBlockPoint(self.x1.copy(), self.x2.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x1)) and np.all(np.isfinite(self.x2)))

    def norm(self) -> float:
        """l2 norm of the concatenated vector."""
        return float(np.sqrt(np.dot(self.x1, self.x1) + np.dot(self.x2, self.x2)))

    def diff_norms(self, other: "TwoBlockPoint") -> tuple[float, float]:
        """(||x1 - y1||, ||x2 - y2||)."""
        return (
            float(np.linalg.norm(self.x1 - other.x1)),
            float(np.linalg.norm(self.x2 - other.x2)),
        )

    @staticmethod
    def zeros(n: int, m: int) -> "TwoBlockPoint":
        return TwoBlockPoint(np.zeros(n), np.zeros(m))


@dataclass(frozen=True)
class MFunction:
    """Continuous nonnegative function of the smoothing parameter with m(0)=0.

    Used to turn the near-monotonicity of the smoothed objective family
    into the executable check in :func:`lpam.smoothing.check_c3`.
    """

    fn: Callable[[float], float]

    def evaluate(self, eps: float) -> float:
        return float(self.fn(eps))

    @staticmethod
    def zero() -> "MFunction":
        return MFunction(lambda _eps: 0.0)


class SmoothedObjective:
    """Contract for a smoothed two-block objective.

    For every eps > 0 the implementor supplies the separable terms, the
    joint term, their gradients and (optionally) a Lipschitz estimate for
    the full gradient.  Implementations must be immutable after
    construction and all calls pure.
    """

    def h1(self, x1: np.ndarray, eps: float) -> float:
        raise NotImplementedError

    def h2(self, x2: np.ndarray, eps: float) -> float:
        raise NotImplementedError

    def h(self, x1: np.ndarray, x2: np.ndarray, eps: float) -> float:
        raise NotImplementedError

    def grad_h1(self, x1: np.ndarray, eps: float) -> np.ndarray:
        raise NotImplementedError

    def grad_h2(self, x2: np.ndarray, eps: float) -> np.ndarray:
        raise NotImplementedError

    def grad1_h(self, x1: np.ndarray, x2: np.ndarray, eps: float) -> np.ndarray:
        raise NotImplementedError

    def grad2_h(self, x1: np.ndarray, x2: np.ndarray, eps: float) -> np.ndarray:
        raise NotImplementedError

    def lipschitz_estimate(self, eps: float) -> Optional[float]:
        """Upper bound on the sum of the three gradient Lipschitz constants,
        or None when no estimate is exported."""
        return None

    def m_function(self) -> MFunction:
        """The monotonicity correction for this instantiation."""
        return MFunction.zero()


def phi_eps(obj: SmoothedObjective, X: TwoBlockPoint, eps: float) -> float:
    """Smoothed objective value: the three-term sum at X."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    terms = {
        "h1": obj.h1(X.x1, eps),
        "h2": obj.h2(X.x2, eps),
        "h": obj.h(X.x1, X.x2, eps),
    }
    for name, val in terms.items():
        if not np.isfinite(val):
            raise NumericError(f"non-finite objective term {name!r}: {val}")
    return terms["h1"] + terms["h2"] + terms["h"]


def grad_phi_eps(obj: SmoothedObjective, X: TwoBlockPoint, eps: float) -> TwoBlockPoint:
    """Full gradient of the smoothed objective as a two-block point.

    The l2 norm of the returned point is the gradient norm used by the
    safeguard and reduction criteria.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    g1 = obj.grad_h1(X.x1, eps) + obj.grad1_h(X.x1, X.x2, eps)
    g2 = obj.grad_h2(X.x2, eps) + obj.grad2_h(X.x1, X.x2, eps)
    G = TwoBlockPoint(g1, g2)
    if not G.is_finite():
        raise NumericError("non-finite entries in objective gradient")
    return G


def finite_difference_grad(
    obj: SmoothedObjective, X: TwoBlockPoint, eps: float, step: float = 1e-6
) -> TwoBlockPoint:
    """Central finite differences of phi_eps, the independent gradient oracle.

    Per-coordinate step is step*max(1, |x_i|).
    """
    out = []
    for which in (0, 1):
        base = X.x1 if which == 0 else X.x2
        g = np.zeros_like(base)
        for i in range(base.size):
            h = step * max(1.0, abs(base[i]))
            xp = base.copy()
            xm = base.copy()
            xp[i] += h
            xm[i] -= h
            if which == 0:
                fp = phi_eps(obj, TwoBlockPoint(xp, X.x2), eps)
                fm = phi_eps(obj, TwoBlockPoint(xm, X.x2), eps)
            else:
                fp = phi_eps(obj, TwoBlockPoint(X.x1, xp), eps)
                fm = phi_eps(obj, TwoBlockPoint(X.x1, xm), eps)
            g[i] = (fp - fm) / (2.0 * h)
        out.append(g)
    return TwoBlockPoint(out[0], out[1])
