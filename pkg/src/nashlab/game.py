"""Finite normal-form games with exact rational utilities.

A game holds one utility tensor per player.  Entries are ``Fraction`` values
in ``[0, 1]``; a float copy is derived lazily for trajectory simulation.

Profiles can be passed around in two shapes:

* blocks: a sequence with one probability vector per player;
* flat: a single 1-D vector of length ``n = sum(strategy_counts)``.

Both shapes carry a numeric mode.  A profile whose entries are all
``Fraction``/``int`` is *exact*; one whose entries are all floats is *float*.
Evaluation functions keep the mode of their input and refuse a mix.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DimensionError, InvalidGameError, ModeError

MAX_PLAYERS = 3
FLOAT_SUM_TOL = 1e-12


# -- rationals -------------------------------------------------------------

def parse_rational(text) -> Fraction:
    """Parse the canonical ``"num/den"`` wire form (plain integers accepted)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"expected a rational string, got {text!r}")
    num, sep, den = text.strip().partition("/")
    try:
        value = Fraction(int(num), int(den)) if sep else Fraction(int(num))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {text!r}") from exc
    return value


def format_rational(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def _is_exact_scalar(v) -> bool:
    return isinstance(v, (Fraction, int, np.integer)) and not isinstance(v, bool)


def _is_float_scalar(v) -> bool:
    return isinstance(v, (float, np.floating))


def scalar_mode(values) -> str:
    """Return ``"exact"`` or ``"float"`` for a flat iterable of scalars."""
    exact = flt = False
    for v in values:
        if _is_exact_scalar(v):
            exact = True
        elif _is_float_scalar(v):
            flt = True
        else:
            raise ModeError(f"unsupported scalar {v!r} of type {type(v).__name__}")
    if exact and flt:
        raise ModeError("profile mixes exact rationals and floats")
    return "float" if flt else "exact"


# -- games -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Game:
    """A p-player game; ``utilities[i][j_1, ..., j_p]`` is player i's payoff."""

    utilities: tuple

    def __post_init__(self):
        tensors = []
        for i, u in enumerate(self.utilities):
            arr = np.array(u, dtype=object)
            tensors.append(arr)
        if not 2 <= len(tensors) <= MAX_PLAYERS:
            raise InvalidGameError(f"need 2..{MAX_PLAYERS} players, got {len(tensors)}")
        shape = tensors[0].shape
        if len(shape) != len(tensors):
            raise InvalidGameError(
                f"utility tensors must have one axis per player, got shape {shape}"
            )
        if any(n < 2 for n in shape):
            raise InvalidGameError(f"every player needs at least 2 strategies, got {shape}")
        clean = []
        for i, arr in enumerate(tensors):
            if arr.shape != shape:
                raise InvalidGameError(
                    f"player {i} tensor has shape {arr.shape}, expected {shape}"
                )
            out = np.empty(shape, dtype=object)
            for idx in np.ndindex(shape):
                v = arr[idx]
                if isinstance(v, str):
                    v = parse_rational(v)
                elif _is_exact_scalar(v):
                    v = Fraction(int(v)) if not isinstance(v, Fraction) else v
                else:
                    raise InvalidGameError(
                        f"utility {v!r} at {idx} for player {i} is not an exact rational"
                    )
                if not 0 <= v <= 1:
                    raise InvalidGameError(
                        f"utility {v} at {idx} for player {i} lies outside [0, 1]"
                    )
                out[idx] = v
            out.flags.writeable = False
            clean.append(out)
        object.__setattr__(self, "utilities", tuple(clean))

    # shape --------------------------------------------------------------
    @property
    def num_players(self) -> int:
        return len(self.utilities)

    @property
    def strategy_counts(self) -> tuple:
        return tuple(self.utilities[0].shape)

    @property
    def n(self) -> int:
        """Total number of strategies."""
        return sum(self.strategy_counts)

    @cached_property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for c in self.strategy_counts:
            out.append(acc)
            acc += c
        out.append(acc)
        return tuple(out)

    def block_slices(self):
        o = self.offsets
        return [slice(o[i], o[i + 1]) for i in range(self.num_players)]

    @cached_property
    def float_utilities(self) -> tuple:
        out = []
        for u in self.utilities:
            f = np.vectorize(float, otypes=[float])(u)
            f.flags.writeable = False
            out.append(f)
        return tuple(out)

    def tensors(self, mode: str) -> tuple:
        return self.float_utilities if mode == "float" else self.utilities

    @property
    def is_bimatrix(self) -> bool:
        return self.num_players == 2

    def bimatrix(self) -> tuple:
        """``(A, B)`` exact payoff matrices of a two-player game."""
        if not self.is_bimatrix:
            raise DimensionError("bimatrix view needs exactly 2 players")
        return self.utilities[0], self.utilities[1]

    @classmethod
    def from_bimatrix(cls, A, B) -> "Game":
        return cls((A, B))

    # identity -----------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "players": self.num_players,
            "strategies": list(self.strategy_counts),
            "utilities": [_nested(u, format_rational) for u in self.utilities],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "Game":
        try:
            p = int(data["players"])
            counts = [int(c) for c in data["strategies"]]
            tensors = data["utilities"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidGameError(f"malformed game document: {exc}") from exc
        if len(counts) != p or len(tensors) != p:
            raise InvalidGameError("players, strategies and utilities disagree in length")
        arrays = []
        for t in tensors:
            arr = np.array(t, dtype=object)
            if arr.shape != tuple(counts):
                raise InvalidGameError(
                    f"utility tensor shape {arr.shape} does not match strategies {counts}"
                )
            for idx in np.ndindex(arr.shape):
                text = arr[idx]
                if not isinstance(text, str):
                    raise InvalidGameError(f"utility at {idx} must be a 'num/den' string")
                num, sep, den = text.partition("/")
                try:
                    q = parse_rational(text)
                except ValueError as exc:
                    raise InvalidGameError(str(exc)) from exc
                if not sep or int(den) <= 0 or math.gcd(int(num), int(den)) != 1:
                    raise InvalidGameError(f"utility {text!r} is not in lowest 'num/den' form")
                arr[idx] = q
            arrays.append(arr)
        return cls(tuple(arrays))

    @classmethod
    def from_json(cls, text: str) -> "Game":
        return cls.from_dict(json.loads(text))

    @cached_property
    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Game):
            return NotImplemented
        return self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.fingerprint)

    def __repr__(self):
        return f"Game(strategies={self.strategy_counts}, fingerprint={self.fingerprint[:12]})"


def _nested(arr, fmt):
    if not isinstance(arr, np.ndarray):
        return fmt(arr)
    return [_nested(a, fmt) for a in arr]


def matching_pennies() -> Game:
    return Game.from_bimatrix([[1, 0], [0, 1]], [[0, 1], [1, 0]])


def battle_of_sexes() -> Game:
    h = Fraction(1, 2)
    return Game.from_bimatrix([[1, 0], [0, h]], [[h, 0], [0, 1]])


def degenerate_example() -> Game:
    """Row player indifferent everywhere; every column mix has two best responses."""
    return Game.from_bimatrix([[1, 1], [1, 1]], [[1, 0], [0, 1]])


def constant_game() -> Game:
    return Game.from_bimatrix([[1, 1], [1, 1]], [[1, 1], [1, 1]])


BUILTINS = {
    "matching-pennies": matching_pennies,
    "battle-of-sexes": battle_of_sexes,
    "degenerate": degenerate_example,
    "constant": constant_game,
}


# -- profiles --------------------------------------------------------------

@dataclass(frozen=True)
class Support:
    """Per-player tuples of strategy indices played with positive probability."""

    sets: tuple

    def __post_init__(self):
        sets = tuple(tuple(sorted(int(i) for i in s)) for s in self.sets)
        if any(len(s) == 0 for s in sets):
            raise ValueError("every player's support must be nonempty")
        object.__setattr__(self, "sets", sets)

    def __iter__(self):
        return iter(self.sets)

    def __getitem__(self, i):
        return self.sets[i]

    def sizes(self) -> tuple:
        return tuple(len(s) for s in self.sets)


@dataclass(frozen=True)
class MixedProfile:
    """One probability vector per player, kept as tuples of scalars."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(b) for b in self.blocks)
        scalar_mode(itertools.chain.from_iterable(blocks))
        object.__setattr__(self, "blocks", blocks)

    @property
    def exact(self) -> bool:
        return scalar_mode(itertools.chain.from_iterable(self.blocks)) == "exact"

    def flat(self) -> np.ndarray:
        values = list(itertools.chain.from_iterable(self.blocks))
        if self.exact:
            return np.array([Fraction(v) for v in values], dtype=object)
        return np.array(values, dtype=float)

    @classmethod
    def from_flat(cls, g: Game, flat) -> "MixedProfile":
        return cls(tuple(tuple(b) for b in as_blocks(g, flat)))

    @classmethod
    def pure(cls, g: Game, choice: Sequence[int]) -> "MixedProfile":
        blocks = []
        for n, j in zip(g.strategy_counts, choice):
            blocks.append(tuple(Fraction(int(k == j)) for k in range(n)))
        return cls(tuple(blocks))

    @classmethod
    def uniform(cls, g: Game) -> "MixedProfile":
        return cls(tuple(tuple(Fraction(1, n) for _ in range(n)) for n in g.strategy_counts))

    def support(self) -> Support:
        return Support(tuple(tuple(i for i, v in enumerate(b) if v > 0) for b in self.blocks))

    def to_strings(self) -> list:
        fmt = format_rational if self.exact else format_float
        return [[fmt(v) for v in b] for b in self.blocks]

    def __iter__(self):
        return iter(self.blocks)

    def __len__(self):
        return len(self.blocks)


def profile_mode(x) -> str:
    if isinstance(x, MixedProfile):
        return "exact" if x.exact else "float"
    if isinstance(x, np.ndarray) and x.dtype != object:
        if np.issubdtype(x.dtype, np.floating):
            return "float"
        if np.issubdtype(x.dtype, np.integer):
            return "exact"
    flat = []
    for item in x:
        if isinstance(item, (np.ndarray, list, tuple)):
            flat.extend(np.asarray(item, dtype=object).ravel().tolist()
                        if isinstance(item, np.ndarray) else item)
        else:
            flat.append(item)
    return scalar_mode(flat)


def _to_array(values, mode):
    if mode == "float":
        return np.asarray(values, dtype=float)
    return np.array([Fraction(int(v)) if not isinstance(v, Fraction) else v for v in values],
                    dtype=object)


def as_blocks(g: Game, x, mode: str | None = None) -> tuple:
    """Normalize a profile (blocks, flat or :class:`MixedProfile`) to per-player arrays."""
    if mode is None:
        mode = profile_mode(x)
    if isinstance(x, MixedProfile):
        x = x.blocks
    counts = g.strategy_counts
    if isinstance(x, np.ndarray) and x.ndim == 1:
        if len(x) != g.n:
            raise DimensionError(f"flat profile has length {len(x)}, expected {g.n}")
        arr = _to_array(list(x), mode)
        return tuple(arr[s] for s in g.block_slices())
    x = list(x)
    if len(x) == g.n and all(np.ndim(v) == 0 for v in x):
        arr = _to_array(x, mode)
        return tuple(arr[s] for s in g.block_slices())
    if len(x) != g.num_players:
        raise DimensionError(f"profile has {len(x)} blocks, game has {g.num_players} players")
    out = []
    for i, (b, n) in enumerate(zip(x, counts)):
        b = list(b)
        if len(b) != n:
            raise DimensionError(f"player {i} vector has length {len(b)}, expected {n}")
        out.append(_to_array(b, mode))
    return tuple(out)


def as_flat(g: Game, x, mode: str | None = None) -> np.ndarray:
    blocks = as_blocks(g, x, mode)
    if blocks[0].dtype == object:
        return np.array(list(itertools.chain.from_iterable(blocks)), dtype=object)
    return np.concatenate(blocks)


def to_exact(g: Game, x) -> np.ndarray:
    """Flat exact copy of a profile.  Floats are converted without rounding."""
    flat = as_flat(g, x) if not isinstance(x, np.ndarray) else x
    return np.array([Fraction(v) if not isinstance(v, Fraction) else v for v in flat],
                    dtype=object)


def to_float(x) -> np.ndarray:
    return np.array([float(v) for v in np.asarray(x, dtype=object).ravel()], dtype=float)


def profile_violation(g: Game, x) -> float:
    """Largest violation of nonnegativity or of a unit block sum (0 for a valid profile)."""
    worst = 0.0
    for b in as_blocks(g, x):
        worst = max(worst, float(-min(b)), abs(float(sum(b) - 1)))
    return max(worst, 0.0)


def is_valid_profile(g: Game, x) -> bool:
    mode = profile_mode(x)
    blocks = as_blocks(g, x, mode)
    if mode == "exact":
        return all(min(b) >= 0 and sum(b) == 1 for b in blocks)
    return all(min(b) >= 0 and abs(math.fsum(b) - 1) <= FLOAT_SUM_TOL for b in blocks)


# -- payoffs ---------------------------------------------------------------

def deviation_payoffs(g: Game, x, player: int, mode: str | None = None) -> np.ndarray:
    """Payoff to ``player`` of each of its pure strategies against ``x_{-player}``."""
    if not 0 <= player < g.num_players:
        raise DimensionError(f"player index {player} out of range")
    mode = mode or profile_mode(x)
    blocks = as_blocks(g, x, mode)
    T = g.tensors(mode)[player]
    if g.num_players == 2:
        return T @ blocks[1] if player == 0 else blocks[0] @ T
    # contract every other player's axis, highest axis first so indices stay put
    for j in reversed(range(g.num_players)):
        if j != player:
            T = np.tensordot(T, blocks[j], axes=([j], [0]))
    return T


def expected_utility(g: Game, x, player: int):
    mode = profile_mode(x)
    blocks = as_blocks(g, x, mode)
    dev = deviation_payoffs(g, blocks, player, mode)
    return blocks[player] @ dev


def pure_deviation_payoff(g: Game, x, player: int, strategy: int):
    dev = deviation_payoffs(g, x, player)
    if not 0 <= strategy < len(dev):
        raise DimensionError(f"strategy {strategy} out of range for player {player}")
    return dev[strategy]


def all_deviation_payoffs(g: Game, x, mode: str | None = None) -> tuple:
    mode = mode or profile_mode(x)
    blocks = as_blocks(g, x, mode)
    return blocks, tuple(deviation_payoffs(g, blocks, i, mode) for i in range(g.num_players))


def player_regrets(g: Game, x) -> list:
    """Per-player gain of the best pure deviation."""
    blocks, devs = all_deviation_payoffs(g, x)
    return [max(d) - b @ d for b, d in zip(blocks, devs)]


def regret(g: Game, x):
    """Maximum gain of a unilateral pure deviation; 0 exactly at a Nash equilibrium."""
    return max(player_regrets(g, x))


def is_nash(g: Game, x, eps=0) -> bool:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return regret(g, x) <= eps


def best_responses(g: Game, x, player: int) -> tuple:
    dev = deviation_payoffs(g, x, player)
    top = max(dev)
    return tuple(i for i, v in enumerate(dev) if v == top)
