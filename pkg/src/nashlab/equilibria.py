"""Exact Nash equilibrium enumeration for small bimatrix games.

Support enumeration: for every pair of supports solve the two indifference
systems over the rationals and keep the solutions that are strictly positive
on their supports and admit no profitable off-support deviation.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DeskScaleError, DimensionError, NashLabError
from .game import Game, MixedProfile, Support, format_rational, regret
from .linalg import solve_unique
from .rng import make_rng

MAX_STRATEGIES = 12
GRID_DENOMINATOR = 10007
MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class Equilibrium:
    profile: MixedProfile
    support: Support

    def flat(self) -> np.ndarray:
        return self.profile.flat()


@dataclass(frozen=True)
class EquilibriumSet:
    equilibria: tuple
    fingerprint: str

    def __len__(self):
        return len(self.equilibria)

    def __iter__(self):
        return iter(self.equilibria)

    def __getitem__(self, i):
        return self.equilibria[i]

    def profiles(self) -> list:
        return [e.profile for e in self.equilibria]

    def flat_exact(self) -> list:
        return [e.flat() for e in self.equilibria]

    def flat_float(self) -> list:
        return [np.array([float(v) for v in e.flat()]) for e in self.equilibria]

    def to_json_obj(self) -> list:
        return [
            {
                "profile": e.profile.to_strings(),
                "support": [list(s) for s in e.support],
                "regret": "0/1",
            }
            for e in self.equilibria
        ]


def _subsets(n):
    for k in range(1, n + 1):
        yield from itertools.combinations(range(n), k)


def _check_bimatrix(g: Game):
    if not g.is_bimatrix:
        raise DimensionError("equilibrium enumeration needs a two-player game")
    if max(g.strategy_counts) > MAX_STRATEGIES:
        raise DeskScaleError(
            f"at most {MAX_STRATEGIES} strategies per player, got {g.strategy_counts}"
        )


class _Indifference:
    """Cached solutions of ``x^T M[:, c] = v (c in C), sum(x) = 1, supp(x) in S``.

    ``M`` is indexed (own strategy, opponent strategy) and holds the
    opponent's payoff, so ``x`` is a mix that makes the opponent indifferent
    among ``C``.
    """

    def __init__(self, M):
        self.M = [[Fraction(v) for v in row] for row in M]
        self.cache = {}

    def mix(self, S, C):
        key = (S, C)
        if key not in self.cache:
            rows = [[self.M[s][c] for s in S] + [Fraction(-1)] for c in C]
            rows.append([Fraction(1)] * len(S) + [Fraction(0)])
            rhs = [Fraction(0)] * len(C) + [Fraction(1)]
            sol = solve_unique(rows, rhs)
            if sol is None:
                self.cache[key] = None
            else:
                x = [Fraction(0)] * len(self.M)
                for s, v in zip(S, sol):
                    x[s] = v
                self.cache[key] = (tuple(x), sol[-1])
        return self.cache[key]

    def opponent_payoffs(self, x):
        ncols = len(self.M[0])
        return [sum(x[s] * self.M[s][c] for s in range(len(x)) if x[s]) for c in range(ncols)]


def _solvers(g: Game):
    A, B = g.bimatrix()
    return _Indifference(B.tolist()), _Indifference(A.T.tolist())


def _scan(g: Game, row_supports):
    """Equilibria whose row support is in ``row_supports``."""
    p1, p2 = _solvers(g)
    n1, n2 = g.strategy_counts
    found = []
    for S1 in row_supports:
        for S2 in _subsets(n2):
            xs = p1.mix(S1, S2)
            if xs is None or any(xs[0][s] <= 0 for s in S1):
                continue
            ys = p2.mix(S2, S1)
            if ys is None or any(ys[0][s] <= 0 for s in S2):
                continue
            x, v2 = xs
            y, v1 = ys
            # v1: row payoff on S1 against y; v2: column payoff on S2 against x
            if max(p2.opponent_payoffs(y)) > v1:
                continue
            if max(p1.opponent_payoffs(x)) > v2:
                continue
            found.append(((S1, S2), (x, y)))
    return found


def _scan_job(args):
    game_json, row_supports = args
    return _scan(Game.from_json(game_json), row_supports)


def enumerate_nash(g: Game, jobs: int = 1) -> EquilibriumSet:
    """All isolated Nash equilibria of a bimatrix game, exactly.

    Support pairs of unequal size are scanned too, so degenerate games still
    report every equilibrium that is the unique solution of its support
    system.  Continua of equilibria (degenerate games) are not enumerated.
    """
    _check_bimatrix(g)
    n1, _ = g.strategy_counts
    supports = list(_subsets(n1))
    if jobs > 1 and len(supports) > 1:
        chunks = [supports[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_scan_job, [(g.to_json(), c) for c in chunks])
            raw = [item for part in parts for item in part]
    else:
        raw = _scan(g, supports)
    seen = set()
    eqs = []
    for (S1, S2), (x, y) in raw:
        key = (x, y)
        if key in seen:
            continue
        seen.add(key)
        eqs.append(Equilibrium(MixedProfile((x, y)), Support((S1, S2))))
    eqs.sort(key=lambda e: (e.support.sizes(), e.support.sets, e.profile.blocks))
    return EquilibriumSet(tuple(eqs), g.fingerprint)


@dataclass(frozen=True)
class NondegeneracyReport:
    nondegenerate: bool
    witness: MixedProfile | None = None
    player: int | None = None
    best_responses: tuple = ()

    def __bool__(self):
        return self.nondegenerate


def _too_many_best_responses(solver: _Indifference, n_own: int, n_opp: int):
    for S in _subsets(n_own):
        if len(S) > n_opp:
            continue
        for C in itertools.combinations(range(n_opp), len(S)):
            sol = solver.mix(S, C)
            if sol is None:
                continue
            x, _ = sol
            if any(v < 0 for v in x):
                continue
            pay = solver.opponent_payoffs(x)
            top = max(pay)
            br = tuple(c for c, v in enumerate(pay) if v == top)
            support_size = sum(1 for v in x if v > 0)
            if len(br) > support_size:
                return x, br
    return None


def is_nondegenerate(g: Game) -> NondegeneracyReport:
    """Check that no mixed strategy with support size k has more than k pure best responses.

    Every violating mix is a vertex of some polytope cut out by a square
    indifference system, so scanning square systems (support S, |S| tied
    opponent strategies) is exhaustive.
    """
    _check_bimatrix(g)
    n1, n2 = g.strategy_counts
    p1, p2 = _solvers(g)
    for player, (solver, n_own, n_opp) in enumerate(((p1, n1, n2), (p2, n2, n1))):
        hit = _too_many_best_responses(solver, n_own, n_opp)
        if hit is None:
            continue
        x, br = hit
        other = tuple(Fraction(1, n_opp) for _ in range(n_opp))
        blocks = (tuple(x), other) if player == 0 else (other, tuple(x))
        return NondegeneracyReport(False, MixedProfile(blocks), player, br)
    return NondegeneracyReport(True)


def random_game(n1: int, n2: int, rng: np.random.Generator, denominator: int = GRID_DENOMINATOR) -> Game:
    draws = rng.integers(0, denominator + 1, size=(2, n1, n2))
    A = [[Fraction(int(v), denominator) for v in row] for row in draws[0]]
    B = [[Fraction(int(v), denominator) for v in row] for row in draws[1]]
    return Game.from_bimatrix(A, B)


def random_nondegenerate_game(n1: int, n2: int, seed: int) -> Game:
    """Uniform draw from the grid {0, 1/D, ..., 1}, resampled until nondegenerate."""
    if not (2 <= n1 <= MAX_STRATEGIES and 2 <= n2 <= MAX_STRATEGIES):
        raise DeskScaleError(f"sizes must lie in 2..{MAX_STRATEGIES}, got {n1}x{n2}")
    for attempt in range(MAX_ATTEMPTS):
        g = random_game(n1, n2, make_rng(seed, "game", n1, n2, attempt))
        if is_nondegenerate(g):
            return g
    raise NashLabError(f"no nondegenerate {n1}x{n2} game after {MAX_ATTEMPTS} attempts")


def check_equilibrium_set(g: Game, eqs: EquilibriumSet) -> bool:
    """Soundness: every member has exact regret 0 and members are distinct."""
    blocks = [e.profile.blocks for e in eqs]
    return len(set(blocks)) == len(blocks) and all(regret(g, e.profile) == 0 for e in eqs)


def equilibrium_set_json(eqs: EquilibriumSet) -> dict:
    return {"fingerprint": eqs.fingerprint, "equilibria": eqs.to_json_obj()}


__all__ = [
    "Equilibrium",
    "EquilibriumSet",
    "NondegeneracyReport",
    "enumerate_nash",
    "is_nondegenerate",
    "random_nondegenerate_game",
    "random_game",
    "format_rational",
]
