"""The LPAM state machine: residual-PALM updates, safeguard, BCD fallback,
smoothing-parameter reduction and termination, plus the plain-BCD baseline.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .core import (
    NumericError,
    SmoothedObjective,
    TwoBlockPoint,
    grad_phi_eps,
    phi_eps,
)

SEPARABLE_FIRST = "separable-first"
JOINT_FIRST = "joint-first"

EXIT_TOLERANCE = "tolerance_met"
EXIT_ITERATION_CAP = "iteration_cap"
EXIT_NUMERIC = "numeric_error"
EXIT_LINE_SEARCH = "line_search_failure"

# phase schedule mirroring the learned step sizes: large early, small late
DEFAULT_TAU_SCHEDULE = (2.0,) * 3 + (1.0,) * 9 + (0.1,) * 3


class LineSearchError(RuntimeError):
    """Backtracking exceeded the hard cap; carries the last candidate."""

    def __init__(self, msg: str, candidate: TwoBlockPoint):
        super().__init__(msg)
        self.candidate = candidate


@dataclass(frozen=True)
class LpamConfig:
    """All solver hyperparameters.

    Step-size fields holding sequences are per-phase schedules applied by
    clamped index (iteration k beyond the end uses the last entry).
    """

    eps0: float = 0.01
    gamma: float = 0.9
    eps_sigma: float = 60000.0
    eps_tol: float = 0.0
    a: float = 1e-4
    ls_delta: float = 0.1
    rho: float = 0.5
    alpha_bar: float = 0.9
    beta_bar: float = 0.9
    step_alpha: Sequence[float] = (0.5,)
    step_tau: Sequence[float] = DEFAULT_TAU_SCHEDULE
    step_beta: Sequence[float] = (0.5,)
    step_gamma: Sequence[float] = DEFAULT_TAU_SCHEDULE
    max_iter: int = 100
    order: str = SEPARABLE_FIRST
    mode: str = "lpam"
    ls_max: int = 60

    def validate(self) -> None:
        if self.eps0 <= 0:
            raise ValueError("eps0 must be positive")
        if not (0 < self.gamma < 1):
            raise ValueError("gamma must lie in (0, 1)")
        if self.eps_sigma <= 0:
            raise ValueError("eps_sigma must be positive")
        if self.eps_tol < 0:
            raise ValueError("eps_tol must be nonnegative")
        if self.a <= 0:
            raise ValueError("safeguard constant a must be positive")
        if not (0 < self.ls_delta < 1):
            raise ValueError("ls_delta must lie in (0, 1)")
        if not (0 < self.rho < 1):
            raise ValueError("rho must lie in (0, 1)")
        if not (0 < self.alpha_bar < 1 and 0 < self.beta_bar < 1):
            raise ValueError("alpha_bar and beta_bar must lie in (0, 1)")
        for name in ("step_alpha", "step_tau", "step_beta", "step_gamma"):
            sched = getattr(self, name)
            if len(sched) < 1:
                raise ValueError(f"{name} schedule must have length >= 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.order not in (SEPARABLE_FIRST, JOINT_FIRST):
            raise ValueError(f"unknown update order {self.order!r}")
        if self.mode not in ("lpam", "bcd_only"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.ls_max < 1:
            raise ValueError("ls_max must be positive")


def _sched(schedule: Sequence[float], k: int) -> float:
    return float(schedule[min(k, len(schedule) - 1)])


@dataclass
class IterateRecord:
    """One row of the solver trace."""

    k: int
    eps: float
    phi: float  # objective at the accepted new point, current eps
    grad_norm: float  # gradient norm at the accepted new point, current eps
    branch: str  # "u" | "v"
    ls_count: int
    decrease: float  # phi(X^k) - phi(X^{k+1}) at current eps
    reduced: bool  # smoothing parameter reduced after this iteration
    phi_pre: float  # objective at the pre-step point, current eps
    grad_norm_pre: float  # gradient norm at the pre-step point, current eps


@dataclass
class SolverState:
    """Iterates, trace and reduction-event checkpoints for one run."""

    X: TwoBlockPoint
    eps: float
    k: int = 0
    trace: list[IterateRecord] = field(default_factory=list)
    events: list[tuple[int, TwoBlockPoint]] = field(default_factory=list)


def u_step(
    obj: SmoothedObjective,
    X: TwoBlockPoint,
    eps: float,
    steps: tuple[float, float, float, float],
    order: str = SEPARABLE_FIRST,
) -> TwoBlockPoint:
    """Residual-form candidate: two explicit gradient corrections per block.

    ``steps`` supplies (alpha, tau, beta, gamma).  The default order
    applies the separable gradients first; the alternative order applies
    the joint gradient first in each block.
    """
    al, tau, be, ga = steps
    x1, x2 = X.x1, X.x2
    if order == SEPARABLE_FIRST:
        z1 = x1 - al * obj.grad_h1(x1, eps)
        u1 = z1 - tau * obj.grad1_h(z1, x2, eps)
        z2 = x2 - be * obj.grad_h2(x2, eps)
        u2 = z2 - ga * obj.grad2_h(u1, z2, eps)
    elif order == JOINT_FIRST:
        z1 = x1 - al * obj.grad1_h(x1, x2, eps)
        u1 = z1 - tau * obj.grad_h1(z1, eps)
        z2 = x2 - be * obj.grad2_h(u1, x2, eps)
        u2 = z2 - ga * obj.grad_h2(z2, eps)
    else:
        raise ValueError(f"unknown update order {order!r}")
    U = TwoBlockPoint(u1, u2)
    if not U.is_finite():
        raise NumericError("non-finite candidate produced by residual update")
    return U


def safeguard_check(
    obj: SmoothedObjective,
    X: TwoBlockPoint,
    U: TwoBlockPoint,
    eps: float,
    a: float,
    phi_x: Optional[float] = None,
    grad_norm_x: Optional[float] = None,
) -> bool:
    """Both safeguard inequalities for accepting the residual candidate.

    Sufficient decrease proportional to the squared step, and the
    gradient norm at X bounded by the step lengths scaled by 1/a.
    Precomputed phi/gradient values at X may be passed in to avoid
    re-evaluation.
    """
    if a <= 0:
        raise ValueError("safeguard constant a must be positive")
    if phi_x is None:
        phi_x = phi_eps(obj, X, eps)
    if grad_norm_x is None:
        grad_norm_x = grad_phi_eps(obj, X, eps).norm()
    d1, d2 = U.diff_norms(X)
    phi_u = phi_eps(obj, U, eps)
    cond1 = phi_u - phi_x <= -a * (d1 * d1 + d2 * d2)
    cond2 = grad_norm_x <= (d1 + d2) / a
    return bool(cond1 and cond2)


def v_step_with_linesearch(
    obj: SmoothedObjective,
    X: TwoBlockPoint,
    eps: float,
    alpha_bar: float,
    beta_bar: float,
    rho: float,
    ls_delta: float,
    ls_max: int = 60,
    phi_x: Optional[float] = None,
) -> tuple[TwoBlockPoint, int, float]:
    """Gauss-Seidel fallback step with backtracking on both step sizes.

    Returns (accepted point, backtrack count, objective at the accepted
    point).  Step sizes start from (alpha_bar, beta_bar) every call and
    are both shrunk by rho until the sufficient-decrease condition holds.
    """
    if phi_x is None:
        phi_x = phi_eps(obj, X, eps)
    x1, x2 = X.x1, X.x2
    g1 = obj.grad_h1(x1, eps) + obj.grad1_h(x1, x2, eps)
    gh2 = obj.grad_h2(x2, eps)
    al, be = alpha_bar, beta_bar
    V = X
    for l in range(ls_max + 1):
        v1 = x1 - al * g1
        v2 = x2 - be * (gh2 + obj.grad2_h(v1, x2, eps))
        V = TwoBlockPoint(v1, v2)
        if not V.is_finite():
            raise NumericError("non-finite fallback candidate")
        phi_v = phi_eps(obj, V, eps)
        d1, d2 = V.diff_norms(X)
        if phi_v - phi_x <= -ls_delta * (d1 * d1 + d2 * d2):
            return V, l, phi_v
        al *= rho
        be *= rho
    raise LineSearchError(f"no sufficient decrease within {ls_max} backtracks", V)


def lpam_run(
    obj: SmoothedObjective, X0: TwoBlockPoint, config: LpamConfig
) -> tuple[SolverState, str]:
    """Run the full solver loop; returns the final state and an exit reason.

    Per iteration: residual candidate, safeguard check, fallback with
    line search when the candidate is rejected, then the reduction check
    on the smoothing parameter and the termination test.
    """
    config.validate()
    if not X0.is_finite():
        raise ValueError("initial point must be finite")
    state = SolverState(X=X0.copy(), eps=config.eps0)
    exit_reason = EXIT_ITERATION_CAP
    for k in range(config.max_iter):
        eps = state.eps
        X = state.X
        try:
            phi_x = phi_eps(obj, X, eps)
            gx = grad_phi_eps(obj, X, eps)
            gn_x = gx.norm()

            branch = "v"
            ls_count = 0
            Xn: Optional[TwoBlockPoint] = None
            phi_n = math.nan
            if config.mode == "lpam":
                steps = (
                    _sched(config.step_alpha, k),
                    _sched(config.step_tau, k),
                    _sched(config.step_beta, k),
                    _sched(config.step_gamma, k),
                )
                U = u_step(obj, X, eps, steps, config.order)
                if safeguard_check(obj, X, U, eps, config.a, phi_x, gn_x):
                    Xn = U
                    phi_n = phi_eps(obj, U, eps)
                    branch = "u"
            if Xn is None:
                Xn, ls_count, phi_n = v_step_with_linesearch(
                    obj,
                    X,
                    eps,
                    config.alpha_bar,
                    config.beta_bar,
                    config.rho,
                    config.ls_delta,
                    config.ls_max,
                    phi_x,
                )
            gn_n = grad_phi_eps(obj, Xn, eps).norm()
        except NumericError:
            exit_reason = EXIT_NUMERIC
            break
        except LineSearchError:
            exit_reason = EXIT_LINE_SEARCH
            break

        reduced = gn_n < config.eps_sigma * config.gamma * eps
        state.trace.append(
            IterateRecord(
                k=k,
                eps=eps,
                phi=phi_n,
                grad_norm=gn_n,
                branch=branch,
                ls_count=ls_count,
                decrease=phi_x - phi_n,
                reduced=reduced,
                phi_pre=phi_x,
                grad_norm_pre=gn_x,
            )
        )
        state.X = Xn
        state.k = k + 1
        if reduced:
            state.events.append((k, Xn.copy()))
            state.eps = config.gamma * eps
        # termination uses the smoothing parameter of this iteration
        if config.eps_sigma * eps < config.eps_tol:
            exit_reason = EXIT_TOLERANCE
            break
    return state, exit_reason


def bcd_run(
    obj: SmoothedObjective, X0: TwoBlockPoint, config: LpamConfig
) -> tuple[SolverState, str]:
    """Plain BCD baseline: the same loop with the residual branch disabled."""
    return lpam_run(obj, X0, replace(config, mode="bcd_only"))


TRACE_FIELDS = (
    "k",
    "eps",
    "phi",
    "grad_norm",
    "branch",
    "ls_count",
    "decrease",
    "reduced",
    "phi_pre",
    "grad_norm_pre",
)


def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_trace_csv(trace: Sequence[IterateRecord], path) -> None:
    """Write the per-iteration trace; float formatting is byte-stable."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_FIELDS)
        for r in trace:
            w.writerow(
                [
                    r.k,
                    _fmt(r.eps),
                    _fmt(r.phi),
                    _fmt(r.grad_norm),
                    r.branch,
                    r.ls_count,
                    _fmt(r.decrease),
                    int(r.reduced),
                    _fmt(r.phi_pre),
                    _fmt(r.grad_norm_pre),
                ]
            )


class TraceParseError(ValueError):
    """Malformed trace file; the message names the offending row."""


def read_trace_csv(path) -> list[IterateRecord]:
    records: list[IterateRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_FIELDS:
            raise TraceParseError(f"bad or missing header in {path}")
        for i, row in enumerate(reader, start=2):
            try:
                records.append(
                    IterateRecord(
                        k=int(row[0]),
                        eps=float(row[1]),
                        phi=float(row[2]),
                        grad_norm=float(row[3]),
                        branch=row[4],
                        ls_count=int(row[5]),
                        decrease=float(row[6]),
                        reduced=bool(int(row[7])),
                        phi_pre=float(row[8]),
                        grad_norm_pre=float(row[9]),
                    )
                )
                if records[-1].branch not in ("u", "v"):
                    raise ValueError("branch must be 'u' or 'v'")
            except (ValueError, IndexError) as exc:
                raise TraceParseError(f"malformed trace row {i} in {path}: {exc}") from exc
    return records
