"""Discrete-time dynamics on the profile space and their Lyapunov functions.

Profiles are flat vectors (player blocks concatenated).  Every dynamic has a
float ``step`` for simulation; Type 1 and Type 2 also have ``step_exact``
over Fractions, used when a line through ``x`` and ``step(x)`` must be
handed to the exact line solver.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .equilibria import EquilibriumSet
from .errors import (
    DomainError,
    LeftDomainError,
    LyapunovViolation,
    StepLimitExceeded,
)
from .game import Game, all_deviation_payoffs, as_flat, format_float, profile_mode, regret, to_exact
from .rng import make_rng

DEFAULT_K = 10.0
DEFAULT_ALPHA = 0.5
DEFAULT_EPS_FIX = 1e-9
DEFAULT_MAX_STEPS = 10 ** 6
DOMAIN_TOL = 1e-9
THIN_AFTER = 10 ** 4
THIN_EVERY = 100


# -- geometry helpers ------------------------------------------------------

def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1), 0.0)


def project_profile(g: Game, x: np.ndarray) -> np.ndarray:
    out = np.array(x, dtype=float)
    for sl in g.block_slices():
        out[sl] = project_simplex(out[sl])
    return out


def domain_violation(g: Game, x: np.ndarray) -> float:
    worst = max(0.0, -float(np.min(x)))
    for sl in g.block_slices():
        worst = max(worst, abs(float(np.sum(x[sl])) - 1.0))
    return worst


def _flat_float(g: Game, x) -> np.ndarray:
    if isinstance(x, np.ndarray) and x.dtype == float and x.ndim == 1 and len(x) == g.n:
        return x
    return np.array([float(v) for v in as_flat(g, x)], dtype=float)


def _flat_exact(g: Game, x) -> np.ndarray:
    if profile_mode(x) != "exact":
        return to_exact(g, _flat_float(g, x))
    return as_flat(g, x, "exact")


def _equilibrium_points(g: Game, eqs) -> list:
    if isinstance(eqs, EquilibriumSet):
        return [np.array(e.flat(), dtype=object) for e in eqs]
    return [np.array(z.flat(), dtype=object) if hasattr(z, "support") else _flat_exact(g, z)
            for z in eqs]


def _float_points(points) -> np.ndarray:
    return np.array([[float(v) for v in z] for z in points], dtype=float)


# -- base ------------------------------------------------------------------

class Dynamic:
    """A map ``x -> step(x)`` on the profile space of ``game``."""

    name = "dynamic"
    game: Game

    def step(self, x) -> np.ndarray:
        raise NotImplementedError

    def lyapunov(self, x) -> float | None:
        return None

    def __call__(self, x):
        return self.step(x)


@dataclass(frozen=True)
class LyapunovEvaluator:
    dynamic: Dynamic
    fn: object
    tol: float = 0.0

    def __call__(self, x) -> float:
        return float(self.fn(x))

    @classmethod
    def of(cls, dynamic: Dynamic, tol: float = 0.0) -> "LyapunovEvaluator":
        return cls(dynamic, dynamic.lyapunov, tol)

    def negated(self) -> "LyapunovEvaluator":
        fn = self.fn
        return LyapunovEvaluator(self.dynamic, lambda x: -fn(x), self.tol)


# -- Type 1 ----------------------------------------------------------------

class Type1Dynamic(Dynamic):
    """Move toward a chosen equilibrium ``z``, slowing down near every equilibrium.

    ``step(x) = x + (z - x)/|z - x| * |z' - x|/k`` with ``z'`` the nearest
    equilibrium, truncated at ``z`` if it would overshoot.
    """

    name = "type1"

    def __init__(self, game: Game, equilibria, target: int = 0, k: float = DEFAULT_K):
        points = _equilibrium_points(game, equilibria)
        if not points:
            raise DomainError("Type 1 dynamic needs at least one equilibrium")
        if not 0 <= target < len(points):
            raise DomainError(f"target index {target} out of range for {len(points)} equilibria")
        if not k > 1:
            raise DomainError("slowdown constant k must exceed 1")
        self.game = game
        self.Z = points
        self.Zf = _float_points(points)
        self.target = target
        self.z = points[target]
        self.zf = self.Zf[target]
        self.k = float(k)

    def step(self, x) -> np.ndarray:
        x = _flat_float(self.game, x)
        near = float(np.min(np.linalg.norm(self.Zf - x, axis=1)))
        diff = self.zf - x
        dist = float(np.linalg.norm(diff))
        if near == 0.0 or dist == 0.0:
            return x.copy()
        length = near / self.k
        if length >= dist:
            return self.zf.copy()
        return x + diff * (length / dist)

    def step_exact(self, x) -> np.ndarray:
        """Exact-direction step; the step length is the float ratio rounded to a rational."""
        x = _flat_exact(self.game, x)
        if any(all(a == b for a, b in zip(x, z)) for z in self.Z):
            return x.copy()
        xf = np.array([float(v) for v in x])
        near = float(np.min(np.linalg.norm(self.Zf - xf, axis=1)))
        dist = float(np.linalg.norm(self.zf - xf))
        s = min(Fraction(near / (self.k * dist)), Fraction(1)) if dist > 0 else Fraction(1)
        if s == 0:
            s = Fraction(1, 10 ** 18)
        return x + (self.z - x) * s

    def lyapunov(self, x) -> float:
        return float(np.linalg.norm(_flat_float(self.game, x) - self.zf))


# -- Type 2 ----------------------------------------------------------------

def _zero_sum_projector(g: Game, v: np.ndarray) -> np.ndarray:
    out = np.array(v, dtype=float)
    for sl in g.block_slices():
        out[sl] -= out[sl].mean()
    return out


def _line_score(Zf: np.ndarray, w: np.ndarray) -> float:
    """Smallest ratio of projection gap to distance over consecutive equilibria."""
    t = Zf @ w
    order = np.argsort(t)
    ts, zs = t[order], Zf[order]
    gaps = np.diff(ts)
    dists = np.linalg.norm(np.diff(zs, axis=0), axis=1)
    return float(np.min(gaps / dists))


def choose_line(g: Game, points, seed: int, candidates: int = 512) -> tuple:
    """Pick a rational tangent direction ``w`` ordering the equilibria well.

    Random zero-sum directions are scored by the worst ratio of consecutive
    projection gap to equilibrium distance; the best one is rounded to a
    rational vector that still sums to zero in every player block.
    """
    Zf = _float_points(points)
    rng = make_rng(seed, "type2-line")
    best, best_score = None, -1.0
    for _ in range(candidates):
        w = _zero_sum_projector(g, rng.standard_normal(g.n))
        w /= np.linalg.norm(w)
        score = _line_score(Zf, w) if len(Zf) > 1 else 1.0
        if score > best_score:
            best, best_score = w, score
    w_exact = [Fraction(float(v)).limit_denominator(10 ** 6) for v in best]
    for sl in g.block_slices():
        block = w_exact[sl]
        mean = sum(block) / len(block)
        w_exact[sl] = [v - mean for v in block]
    return tuple(w_exact), best_score


class Type2Dynamic(Dynamic):
    """Polytope and chamber construction over an ordering line.

    Equilibria are sorted by ``t(z) = <z - y, w>``.  With 0-based indices,
    odd-indexed equilibria carry a hyperplane slice on which the map contracts
    toward them; even-indexed ones attract the slab around them.  Between a
    slice equilibrium ``z_e`` and an attracting one ``z_o`` (``theta`` runs
    from 0 on the slice to 1 on ``z_o``'s hyperplane) the map is

        x + (1 - theta) * alpha * (c - x) + theta * (z_o - x) / k,
        c = (1 - theta) z_e + theta z_o.

    Beyond the outermost equilibria ``theta = W / (W + D)`` with ``W`` the
    adjacent chamber width and ``D`` the distance past ``z_o`` along ``w``,
    and the map is ``x + theta (z_o - x)/k + (1 - theta) alpha (z_e - x)``.
    Every output is a convex combination of ``x`` and points of X.
    """

    name = "type2"

    def __init__(self, game: Game, equilibria, seed: int = 0, alpha: float = DEFAULT_ALPHA,
                 k: float = DEFAULT_K, w=None):
        points = _equilibrium_points(game, equilibria)
        if not points:
            raise DomainError("Type 2 dynamic needs at least one equilibrium")
        if len(points) % 2 == 0:
            raise DomainError(f"Type 2 needs an odd number of equilibria, got {len(points)}")
        if not 0 < alpha < 1:
            raise DomainError("contraction alpha must lie in (0, 1)")
        if not k > 1:
            raise DomainError("slowdown constant k must exceed 1")
        self.game = game
        self.alpha = float(alpha)
        self.k = float(k)
        if w is None:
            w, self.line_score = choose_line(game, points, seed)
        else:
            w = tuple(Fraction(v) for v in w)
            self.line_score = (_line_score(_float_points(points), np.array([float(v) for v in w]))
                               if len(points) > 1 else 1.0)
        self.w_exact = np.array(w, dtype=object)
        counts = game.strategy_counts
        self.y_exact = np.array([Fraction(1, n) for n in counts for _ in range(n)], dtype=object)
        t_exact = [sum((z - self.y_exact) * self.w_exact) for z in points]
        if len(set(t_exact)) != len(t_exact):
            raise DomainError("equilibrium projections on the ordering line are not distinct")
        order = sorted(range(len(points)), key=lambda i: t_exact[i])
        self.Z = [points[i] for i in order]
        self.t_exact = [t_exact[i] for i in order]
        wf = np.array([float(v) for v in w])
        self.w_scale = float(np.linalg.norm(wf))
        self.w = wf / self.w_scale  # unit
        self.y = np.array([float(v) for v in self.y_exact])
        self.Zf = _float_points(self.Z)
        self.tf = [float((z - self.y) @ self.w) for z in self.Zf]

    # region logic shared by the float and exact paths
    def _displacement(self, x, t, ts, Z, alpha, k, one):
        m = len(Z)
        if m == 1:
            return (Z[0] - x) / k
        if t <= ts[0] or t >= ts[-1]:
            o, e = (0, 1) if t <= ts[0] else (m - 1, m - 2)
            W = abs(ts[e] - ts[o])
            D = abs(ts[o] - t)
            theta = W / (W + D)
            return theta * (Z[o] - x) / k + (one - theta) * alpha * (Z[e] - x)
        j = bisect.bisect_right(ts, t) - 1
        e, o = (j, j + 1) if j % 2 == 1 else (j + 1, j)
        theta = (t - ts[e]) / (ts[o] - ts[e])
        c = (one - theta) * Z[e] + theta * Z[o]
        return (one - theta) * alpha * (c - x) + theta * (Z[o] - x) / k

    def t_of(self, x) -> float:
        return float((_flat_float(self.game, x) - self.y) @ self.w)

    def step(self, x) -> np.ndarray:
        x = _flat_float(self.game, x)
        t = float((x - self.y) @ self.w)
        return x + self._displacement(x, t, self.tf, self.Zf, self.alpha, self.k, 1.0)

    def step_exact(self, x) -> np.ndarray:
        x = _flat_exact(self.game, x)
        t = sum((x - self.y_exact) * self.w_exact)
        alpha = Fraction(self.alpha)
        k = Fraction(self.k)
        return x + self._displacement(x, t, self.t_exact, self.Z, alpha, k, Fraction(1))

    def region(self, x) -> tuple:
        """``(kind, index)``: ``("slice", j)``, ``("chamber", j)``, ``("outer", j)`` or ``("single", 0)``."""
        t = self.t_of(x)
        ts = self.tf
        if len(ts) == 1:
            return "single", 0
        if t < ts[0]:
            return "outer", 0
        if t > ts[-1]:
            return "outer", len(ts) - 1
        j = bisect.bisect_right(ts, t) - 1
        if t == ts[j] and j % 2 == 1:
            return "slice", j
        return "chamber", j

    def lyapunov(self, x) -> float:
        """Slice: distance to its equilibrium.  Elsewhere: normalized w-distance to the
        attracting hyperplane plus ``1/k`` times the distance from the projected point
        to the attracting equilibrium."""
        x = _flat_float(self.game, x)
        ts, Z = self.tf, self.Zf
        m = len(Z)
        if m == 1:
            return float(np.linalg.norm(x - Z[0]))
        t = float((x - self.y) @ self.w)
        if t <= ts[0] or t >= ts[-1]:
            o, e = (0, 1) if t <= ts[0] else (m - 1, m - 2)
            level = abs(ts[o] - t) / abs(ts[e] - ts[o])
        else:
            j = bisect.bisect_right(ts, t) - 1
            e, o = (j, j + 1) if j % 2 == 1 else (j + 1, j)
            level = (ts[o] - t) / (ts[o] - ts[e])
            if level == 1.0:
                return float(np.linalg.norm(x - Z[e]))
        x_proj = project_profile(self.game, x + (ts[o] - t) * self.w)
        return level + float(np.linalg.norm(x_proj - Z[o])) / self.k


# -- BNN -------------------------------------------------------------------

def _deviation_payoffs_float(g: Game, blocks) -> list:
    """Pure-strategy payoffs with correctly rounded sums (order independent)."""
    U = g.float_utilities
    out = []
    if g.num_players == 2:
        x, y = blocks
        A, B = U
        out.append([math.fsum(A[a, b] * y[b] for b in range(len(y))) for a in range(len(x))])
        out.append([math.fsum(B[a, b] * x[a] for a in range(len(x))) for b in range(len(y))])
        return out
    x, y, z = blocks
    T0, T1, T2 = U
    out.append([math.fsum(T0[a, b, c] * y[b] * z[c] for b in range(len(y)) for c in range(len(z)))
                for a in range(len(x))])
    out.append([math.fsum(T1[a, b, c] * x[a] * z[c] for a in range(len(x)) for c in range(len(z)))
                for b in range(len(y))])
    out.append([math.fsum(T2[a, b, c] * x[a] * y[b] for a in range(len(x)) for b in range(len(y)))
                for c in range(len(z))])
    return out


def bnn_field(g: Game, x) -> np.ndarray:
    """Brown-von Neumann-Nash vector field at ``x`` as a flat float vector.

    Exact input is evaluated in rational arithmetic first, so the field is
    exactly zero at exact equilibria.
    """
    if profile_mode(x) == "exact":
        out = []
        for b, dev in zip(*all_deviation_payoffs(g, x, "exact")):
            avg = sum(p * u for p, u in zip(b, dev))
            excess = [max(u - avg, 0) for u in dev]
            total = sum(excess)
            out.extend(float(e - p * total) for e, p in zip(excess, b))
        return np.array(out, dtype=float)
    x = _flat_float(g, x)
    blocks = [x[sl] for sl in g.block_slices()]
    devs = _deviation_payoffs_float(g, blocks)
    out = []
    for b, dev in zip(blocks, devs):
        avg = math.fsum(p * u for p, u in zip(b, dev))
        excess = [max(u - avg, 0.0) for u in dev]
        total = math.fsum(excess)
        out.extend(e - p * total for e, p in zip(excess, b))
    return np.array(out, dtype=float)


def bnn_step(g: Game, x, eta: float) -> np.ndarray:
    if not eta > 0:
        raise DomainError("step size eta must be positive")
    x = _flat_float(g, x)
    y = x + eta * bnn_field(g, x)
    if np.min(y) < 0:
        y = project_profile(g, y)
    return y


class BnnDynamic(Dynamic):
    name = "bnn"

    def __init__(self, game: Game, eta: float):
        if not eta > 0:
            raise DomainError("step size eta must be positive")
        self.game = game
        self.eta = float(eta)

    def step(self, x) -> np.ndarray:
        return bnn_step(self.game, x, self.eta)


# -- Lyapunov helpers ------------------------------------------------------

def lyapunov_type1(dyn: Type1Dynamic, x) -> float:
    return dyn.lyapunov(x)


def lyapunov_type2(dyn: Type2Dynamic, x) -> float:
    return dyn.lyapunov(x)


def fixed_point_consistent(dyn: Dynamic, x, step_tol: float = 1e-12, regret_tol: float = 1e-9) -> bool:
    """True when ``step(x) = x`` (within ``step_tol``) exactly when ``regret(x) <= regret_tol``."""
    x = _flat_float(dyn.game, x)
    fixed = float(np.linalg.norm(dyn.step(x) - x)) <= step_tol
    return fixed == (float(regret(dyn.game, x)) <= regret_tol)


# -- trajectories ----------------------------------------------------------

@dataclass
class Trajectory:
    start: np.ndarray
    profiles: list
    steps: list
    lyapunov: list
    displacements: list
    reason: str
    total_steps: int
    final: np.ndarray
    final_displacement: float
    meta: dict = field(default_factory=dict)

    def footer(self) -> dict:
        return {
            "reason": self.reason,
            "steps": self.total_steps,
            "final_displacement": format_float(self.final_displacement),
            **self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        n = len(self.start)
        writer.writerow(["step"] + [f"coord_{i}" for i in range(n)] + ["lyapunov", "displacement"])
        for s, x, lv, d in zip(self.steps, self.profiles, self.lyapunov, self.displacements):
            writer.writerow(
                [s] + [format_float(v) for v in x]
                + ["" if lv is None else format_float(lv), format_float(d)]
            )
        buf.write("# " + json.dumps(self.footer(), sort_keys=True) + "\n")
        return buf.getvalue()


def run_trajectory(dyn: Dynamic, x0, eps_fix: float = DEFAULT_EPS_FIX,
                   max_steps: int = DEFAULT_MAX_STEPS, record_lyapunov: bool = True,
                   thin_every: int = THIN_EVERY) -> Trajectory:
    """Iterate ``dyn`` from ``x0`` until a step moves less than ``eps_fix``."""
    g = dyn.game
    x = _flat_float(g, x0).copy()
    if domain_violation(g, x) > DOMAIN_TOL:
        raise LeftDomainError(x, 0, domain_violation(g, x))
    lyap = (lambda v: dyn.lyapunov(v)) if record_lyapunov else (lambda v: None)
    profiles, steps, lvals, disps = [x.copy()], [0], [lyap(x)], [0.0]
    reason = "step-limit"
    disp = math.inf
    n = 0
    while n < max_steps:
        y = dyn.step(x)
        n += 1
        disp = float(np.linalg.norm(y - x))
        if disp < eps_fix:
            reason = "converged"
            x = y
            break
        viol = domain_violation(g, y)
        if viol > DOMAIN_TOL:
            raise LeftDomainError(y, n, viol)
        x = y
        if n <= THIN_AFTER or n % thin_every == 0:
            profiles.append(x.copy())
            steps.append(n)
            lvals.append(lyap(x))
            disps.append(disp)
    return Trajectory(
        start=profiles[0], profiles=profiles, steps=steps, lyapunov=lvals,
        displacements=disps, reason=reason, total_steps=n, final=x,
        final_displacement=disp, meta={"dynamic": dyn.name},
    )


@dataclass(frozen=True)
class DescentResult:
    profile: np.ndarray
    steps: int
    regret: float
    lyapunov: float


def descend(dyn: Dynamic, L, x0, eps_fix: float = DEFAULT_EPS_FIX,
            max_steps: int = DEFAULT_MAX_STEPS) -> DescentResult:
    """Follow ``dyn`` while checking that ``L`` strictly decreases at every step."""
    if L is None:
        L = LyapunovEvaluator.of(dyn)
    x = _flat_float(dyn.game, x0).copy()
    lx = L(x)
    for n in range(1, max_steps + 1):
        y = dyn.step(x)
        if float(np.linalg.norm(y - x)) < eps_fix:
            return DescentResult(y, n, float(regret(dyn.game, y)), L(y))
        ly = L(y)
        if not ly < lx + getattr(L, "tol", 0.0):
            raise LyapunovViolation(x, lx, ly, n)
        x, lx = y, ly
    raise StepLimitExceeded(max_steps, x)
