"""Black-box reductions: find an equilibrium from one Type 1 query, test uniqueness with Type 2 queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .affine import AffineSubspace, nash_on_line
from .dynamics import DEFAULT_ALPHA, DEFAULT_K, Type1Dynamic, Type2Dynamic
from .equilibria import enumerate_nash, is_nondegenerate
from .errors import DegenerateGameError, DomainError, OracleError
from .game import Game, format_rational, regret
from .rng import make_rng, uniform_profile

RATIONAL_DENOMINATOR = 2 ** 20


@dataclass
class DynamicOracle:
    """Opaque step function that counts and logs its queries."""

    fn: object
    log: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.log)

    def __call__(self, x):
        y = self.fn(x)
        self.log.append((np.array(x, dtype=object), np.array(y, dtype=object)))
        return y


def type1_oracle(g: Game, eqs=None, target: int = 0, k: float = DEFAULT_K) -> DynamicOracle:
    eqs = enumerate_nash(g) if eqs is None else eqs
    return DynamicOracle(Type1Dynamic(g, eqs, target, k).step_exact)


def type2_oracle(g: Game, eqs=None, seed: int = 0, alpha: float = DEFAULT_ALPHA,
                 k: float = DEFAULT_K) -> DynamicOracle:
    eqs = enumerate_nash(g) if eqs is None else eqs
    return DynamicOracle(Type2Dynamic(g, eqs, seed=seed, alpha=alpha, k=k).step_exact)


def random_rational_profile(g: Game, rng: np.random.Generator,
                            denominator: int = RATIONAL_DENOMINATOR) -> np.ndarray:
    """Uniform draw from X rounded to a strictly positive rational profile."""
    x = uniform_profile(rng, g.strategy_counts)
    out = []
    for sl in g.block_slices():
        block = [max(Fraction(round(v * denominator), denominator), Fraction(1, denominator))
                 for v in x[sl]]
        block[-1] = 1 - sum(block[:-1])
        if block[-1] <= 0:
            block = [Fraction(1, len(block))] * len(block)
        out.extend(block)
    return np.array(out, dtype=object)


def _line_through(x, y) -> AffineSubspace:
    return AffineSubspace.through(list(x), list(y))


def find_nash_via_type1(g: Game, oracle: DynamicOracle, seed: int = 0,
                        forward_only: bool = False) -> np.ndarray:
    """One oracle query at a random interior point, then an exact line solve.

    Returns the equilibrium on the line with the smallest positive parameter
    (the first one met moving forward), falling back to the nearest one
    behind ``x`` unless ``forward_only``.
    """
    x = random_rational_profile(g, make_rng(seed, "find-nash"))
    y = np.array(oracle(x), dtype=object)
    if all(a == b for a, b in zip(x, y)):
        if regret(g, x) == 0:
            return x
        raise OracleError("oracle fixed a non-equilibrium point: not a Type 1 dynamic")
    line = _line_through(x, y)
    sol = nash_on_line(g, line)
    candidates = [p.lo for p in sol.pieces]
    forward = [lam for lam in candidates if lam > 0]
    if forward:
        lam = min(forward)
    elif candidates and not forward_only:
        lam = max(candidates)
    else:
        raise OracleError("no equilibrium on the line through x and oracle(x): oracle is not Type 1")
    if not lam.is_rational:
        raise OracleError(f"equilibrium parameter {lam} is irrational")
    return np.array(line.point(lam.as_fraction()), dtype=object)


@dataclass(frozen=True)
class UniquenessVerdict:
    verdict: str
    trials: int
    hits: int
    lines: tuple

    def to_json_obj(self) -> dict:
        return {"verdict": self.verdict, "trials": self.trials, "hits": self.hits,
                "lines": list(self.lines)}


def uniqueness_test(g: Game, oracle: DynamicOracle, trials: int, seed: int = 0) -> UniquenessVerdict:
    """Each trial votes "unique" when the line through a random ``x`` and ``oracle(x)``
    meets an equilibrium; the majority decides."""
    if trials <= 0:
        raise DomainError("no trials")
    report = is_nondegenerate(g)
    if not report:
        raise DegenerateGameError("the game is degenerate", witness=report.witness)
    hits = 0
    lines = []
    for i in range(trials):
        x = random_rational_profile(g, make_rng(seed, "uniqueness", i))
        y = np.array(oracle(x), dtype=object)
        if all(a == b for a, b in zip(x, y)):
            hit = regret(g, x) == 0
            lines.append({"base": [format_rational(v) for v in x], "fixed": True, "hit": hit})
        else:
            line = _line_through(x, y)
            sol = nash_on_line(g, line)
            hit = not sol.empty
            lines.append({**line.to_dict(), "solutions": sol.to_json_obj(), "hit": hit})
        hits += hit
    verdict = "unique" if 2 * hits > trials else "multiple"
    return UniquenessVerdict(verdict, trials, hits, tuple(lines))


__all__ = [
    "DynamicOracle",
    "UniquenessVerdict",
    "find_nash_via_type1",
    "random_rational_profile",
    "type1_oracle",
    "type2_oracle",
    "uniqueness_test",
]
