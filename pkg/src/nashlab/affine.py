"""Nash equilibria of a bimatrix game that lie on a line or a low-dimensional affine subspace.

Lines (``d = 1``) are solved algebraically.  Along ``x(lam) = A + B*lam`` the
equilibrium conditions

    u_i(x) - u_i(s, x_{-i}) >= 0   for every player i and pure strategy s,
    A_j + B_j * lam >= 0           for every coordinate j,

are quadratic (resp. linear) inequalities in ``lam`` with rational
coefficients.  Sorting all of their real roots splits the feasible interval
into finitely many cells on which every sign is constant; each root and one
rational sample per open cell is tested exactly.

Subspaces of dimension ``d <= 4`` are handled by enumerating the game's
equilibria and solving ``A + B lam = z`` for each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebraic import QuadraticRoot, compare_roots, quadratic_roots, rational_between
from .equilibria import enumerate_nash, is_nondegenerate
from .errors import DegenerateGameError, DimensionError, SubspaceError
from .game import Game, format_rational, parse_rational
from .linalg import rank, solve_unique

MAX_AFFINE_DIM = 4


@dataclass(frozen=True)
class AffineSubspace:
    """``{base + sum_j lam_j * directions[j]}`` in flat profile coordinates."""

    base: tuple
    directions: tuple

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(Fraction(v) for v in self.base))
        object.__setattr__(
            self, "directions", tuple(tuple(Fraction(v) for v in d) for d in self.directions)
        )

    @property
    def dim(self) -> int:
        return len(self.directions)

    def validate(self, g: Game):
        n = g.n
        if len(self.base) != n:
            raise DimensionError(f"base has length {len(self.base)}, expected {n}")
        if not self.directions:
            raise SubspaceError("an affine subspace needs at least one direction")
        for sl in g.block_slices():
            if sum(self.base[sl]) != 1:
                raise SubspaceError("base point blocks must each sum to exactly 1")
        for j, d in enumerate(self.directions):
            if len(d) != n:
                raise DimensionError(f"direction {j} has length {len(d)}, expected {n}")
            if not any(d):
                raise SubspaceError(f"direction {j} is the zero vector")
            for sl in g.block_slices():
                if sum(d[sl]) != 0:
                    raise SubspaceError(
                        f"direction {j} is not tangent: a player block does not sum to 0"
                    )
        if rank([list(d) for d in self.directions]) != self.dim:
            raise SubspaceError("directions are linearly dependent")
        if self.dim > n - g.num_players:
            raise SubspaceError(f"dimension {self.dim} exceeds that of the profile space")

    def point(self, lam) -> tuple:
        lam = tuple(lam) if isinstance(lam, (list, tuple)) else (lam,)
        return tuple(
            b + sum(l * d[i] for l, d in zip(lam, self.directions))
            for i, b in enumerate(self.base)
        )

    def to_dict(self) -> dict:
        return {
            "base": [format_rational(v) for v in self.base],
            "directions": [[format_rational(v) for v in d] for d in self.directions],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AffineSubspace":
        try:
            base = [parse_rational(v) for v in _flatten(data["base"])]
            dirs = [[parse_rational(v) for v in _flatten(d)] for d in data["directions"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise SubspaceError(f"malformed subspace document: {exc}") from exc
        return cls(tuple(base), tuple(tuple(d) for d in dirs))

    @classmethod
    def line(cls, base, direction) -> "AffineSubspace":
        return cls(tuple(base), (tuple(direction),))

    @classmethod
    def through(cls, p, q) -> "AffineSubspace":
        """Line through two profiles, parametrized so ``lam = 0`` is ``p`` and ``lam = 1`` is ``q``."""
        p = [Fraction(v) for v in p]
        return cls.line(p, [Fraction(b) - a for a, b in zip(p, q)])


def _flatten(v):
    if isinstance(v, (list, tuple)) and v and isinstance(v[0], (list, tuple)):
        return [x for block in v for x in block]
    return list(v)


@dataclass(frozen=True)
class LambdaPiece:
    kind: str  # "point" or "interval"
    lo: QuadraticRoot
    hi: QuadraticRoot

    def contains(self, lam) -> bool:
        return compare_roots(self.lo, lam) <= 0 <= compare_roots(self.hi, lam)


@dataclass(frozen=True)
class LambdaSolutionSet:
    space: AffineSubspace
    pieces: tuple = ()  # d = 1
    points: tuple = ()  # d > 1: rational lambda vectors
    equilibria: tuple = field(default=(), compare=False)

    @property
    def empty(self) -> bool:
        return not self.pieces and not self.points

    def isolated_points(self) -> list:
        """Lambda values of all point pieces (d = 1) as QuadraticRoots."""
        return [p.lo for p in self.pieces if p.kind == "point"]

    def contains(self, lam) -> bool:
        if self.space.dim == 1:
            return any(p.contains(lam) for p in self.pieces)
        return tuple(Fraction(v) for v in lam) in self.points

    def to_json_obj(self) -> list:
        out = []
        if self.space.dim == 1:
            for piece in self.pieces:
                if piece.kind == "point":
                    out.append({
                        "lambda": piece.lo.to_string(),
                        "profile": _profile_strings(self.space, piece.lo),
                        "kind": "point",
                    })
                else:
                    out.append({
                        "lambda": [piece.lo.to_string(), piece.hi.to_string()],
                        "profile": [_profile_strings(self.space, piece.lo),
                                    _profile_strings(self.space, piece.hi)],
                        "kind": "interval",
                    })
        else:
            for lam in self.points:
                out.append({
                    "lambda": [format_rational(v) for v in lam],
                    "profile": [format_rational(v) for v in self.space.point(lam)],
                    "kind": "point",
                })
        return out


def _profile_strings(space: AffineSubspace, lam: QuadraticRoot) -> list:
    d = space.directions[0]
    return [lam.affine(a, b).to_string() for a, b in zip(space.base, d)]


def _check_two_players(g: Game):
    if not g.is_bimatrix:
        raise DimensionError("Nash on an affine space is implemented for two players only")


def _bilinear(u, M, v):
    return sum(u[i] * M[i][j] * v[j] for i in range(len(u)) if u[i] for j in range(len(v)) if v[j])


def condition_polynomials(g: Game, line: AffineSubspace) -> list:
    """Coefficients ``(c0, c1, c2)`` of every equilibrium inequality ``poly(lam) >= 0``."""
    A, B = (m.tolist() for m in g.bimatrix())
    n1, n2 = g.strategy_counts
    a = line.base
    b = line.directions[0]
    a1, a2, b1, b2 = a[:n1], a[n1:], b[:n1], b[n1:]
    polys = []
    for M, own in ((A, 0), (B, 1)):
        # expected utility u(x(lam)) = k0 + k1 lam + k2 lam^2
        k0 = _bilinear(a1, M, a2)
        k1 = _bilinear(a1, M, b2) + _bilinear(b1, M, a2)
        k2 = _bilinear(b1, M, b2)
        if own == 0:
            for s in range(n1):
                d0 = sum(M[s][j] * a2[j] for j in range(n2))
                d1 = sum(M[s][j] * b2[j] for j in range(n2))
                polys.append((k0 - d0, k1 - d1, k2))
        else:
            for t in range(n2):
                d0 = sum(a1[i] * M[i][t] for i in range(n1))
                d1 = sum(b1[i] * M[i][t] for i in range(n1))
                polys.append((k0 - d0, k1 - d1, k2))
    return polys


def feasible_interval(line: AffineSubspace):
    """``(lo, hi)`` rationals with ``base + lam*dir >= 0`` iff ``lo <= lam <= hi``; None if empty."""
    lo = hi = None
    for a, b in zip(line.base, line.directions[0]):
        if b == 0:
            if a < 0:
                return None
            continue
        bound = -a / b
        if b > 0:
            lo = bound if lo is None else max(lo, bound)
        else:
            hi = bound if hi is None else min(hi, bound)
    if lo is None or hi is None or lo > hi:
        # a tangent nonzero direction always has both signs, so bounds exist
        return None
    return lo, hi


def _all_nonnegative(polys, lam: QuadraticRoot) -> bool:
    return all(lam.eval_poly_sign(p) >= 0 for p in polys)


def _all_nonnegative_rational(polys, lam: Fraction) -> bool:
    return all(p[0] + lam * (p[1] + lam * p[2]) >= 0 for p in polys)


def nash_on_line(g: Game, line: AffineSubspace) -> LambdaSolutionSet:
    """Every ``lam`` with ``line(lam)`` a Nash equilibrium, as closed intervals and points."""
    _check_two_players(g)
    if line.dim != 1:
        raise SubspaceError(f"nash_on_line needs a line, got dimension {line.dim}")
    line.validate(g)
    interval = feasible_interval(line)
    if interval is None:
        return LambdaSolutionSet(line)
    lo, hi = interval
    polys = [p for p in condition_polynomials(g, line) if any(p)]

    lo_r, hi_r = QuadraticRoot.rational(lo), QuadraticRoot.rational(hi)
    critical = [lo_r, hi_r]
    for c0, c1, c2 in polys:
        for root in quadratic_roots(c0, c1, c2):
            if compare_roots(lo_r, root) <= 0 <= compare_roots(hi_r, root):
                critical.append(root)
    critical.sort()
    uniq = []
    for c in critical:
        if not uniq or compare_roots(uniq[-1], c) != 0:
            uniq.append(c)

    point_ok = [_all_nonnegative(polys, c) for c in uniq]
    gap_ok = [
        _all_nonnegative_rational(polys, rational_between(uniq[k], uniq[k + 1]))
        for k in range(len(uniq) - 1)
    ]

    pieces = []
    k, m = 0, len(uniq)
    while k < m:
        if k < m - 1 and gap_ok[k]:
            start = k
            while k < m - 1 and gap_ok[k]:
                k += 1
            # closed interval: both endpoints hold by continuity
            pieces.append(LambdaPiece("interval", uniq[start], uniq[k]))
        elif point_ok[k]:
            pieces.append(LambdaPiece("point", uniq[k], uniq[k]))
        k += 1
    return LambdaSolutionSet(line, tuple(pieces))


def nash_on_affine(g: Game, space: AffineSubspace, jobs: int = 1) -> LambdaSolutionSet:
    """Equilibria of a nondegenerate game inside a subspace of dimension at most 4."""
    _check_two_players(g)
    if not 1 <= space.dim <= MAX_AFFINE_DIM:
        raise SubspaceError(f"dimension must lie in 1..{MAX_AFFINE_DIM}, got {space.dim}")
    space.validate(g)
    report = is_nondegenerate(g)
    if not report:
        raise DegenerateGameError("the game is degenerate", witness=report.witness)
    eqs = enumerate_nash(g, jobs=jobs)
    cols = list(zip(*space.directions))  # n rows, d columns
    points, hits = [], []
    for e in eqs:
        z = e.flat()
        lam = solve_unique([list(r) for r in cols], [zi - ai for zi, ai in zip(z, space.base)])
        if lam is not None:
            points.append(tuple(lam))
            hits.append(e)
    return LambdaSolutionSet(space, points=tuple(points), equilibria=tuple(hits))


def lambdas_of_equilibria(g: Game, line: AffineSubspace, eqs=None) -> list:
    """Oracle: the rational ``lam`` values at which ``line`` meets an enumerated equilibrium."""
    eqs = enumerate_nash(g) if eqs is None else eqs
    d = line.directions[0]
    out = []
    for e in eqs:
        z = e.flat()
        lam = solve_unique([[v] for v in d], [zi - ai for zi, ai in zip(z, line.base)])
        if lam is not None:
            out.append(lam[0])
    return sorted(out)
