"""The Proving Game: Bob queries a dynamic, Alice answers with BNN steps, and
afterwards Alice must exhibit a legitimate Nash-convergent dynamic ``Phi``
consistent with every answer she gave.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import Dynamic, bnn_step, domain_violation, project_profile
from .equilibria import enumerate_nash
from .errors import ClaimsFailed, DomainError, ProtocolError
from .game import Game, format_float, regret
from .rng import make_rng, uniform_profile

SPURIOUS_TOL = 1e-12
CONVERGENCE_TOL = 1e-6


@dataclass(frozen=True)
class PgConfig:
    budget: int = 32
    eps_r: float = 1e-2
    eta: float = 1e-3
    rho: float = 1e-4
    target: int = 0
    seed: int = 0
    K: float = 2.0
    outside: str = "type1"  # or "displayed"

    def __post_init__(self):
        if not 0 < self.rho < self.eta / 4:
            raise DomainError(f"need 0 < rho < eta/4, got rho={self.rho}, eta={self.eta}")
        if not 0 < self.eps_r < 1:
            raise DomainError("eps_r must lie in (0, 1)")
        if self.budget < 0:
            raise DomainError("budget must be nonnegative")
        if not self.K > 1:
            raise DomainError("K must exceed 1")
        if self.outside not in ("type1", "displayed"):
            raise DomainError(f"unknown outside rule {self.outside!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def alice_respond(g: Game, x, cfg: PgConfig) -> np.ndarray:
    """One BNN step of size ``eta``; Bob can compute it himself."""
    return bnn_step(g, x, cfg.eta)


# -- regret in bulk (float) -------------------------------------------------

def regrets_float(g: Game, X: np.ndarray) -> np.ndarray:
    """Regret of each row of ``X`` (flat float profiles)."""
    X = np.atleast_2d(X)
    if g.num_players != 2:
        return np.array([float(regret(g, x)) for x in X])
    A, B = g.float_utilities
    n1 = g.strategy_counts[0]
    x, y = X[:, :n1], X[:, n1:]
    u1 = y @ A.T
    u2 = x @ B
    r1 = u1.max(axis=1) - np.einsum("ij,ij->i", x, u1)
    r2 = u2.max(axis=1) - np.einsum("ij,ij->i", y, u2)
    return np.maximum(r1, r2)


# -- Bob ---------------------------------------------------------------------

def _halton(index: int, base: int) -> float:
    f, r = 1.0, 0.0
    while index > 0:
        f /= base
        r += f * (index % base)
        index //= base
    return r


_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


class BobStrategy:
    name = "bob"

    def next_query(self, g: Game, rounds: list, cfg: PgConfig):
        return None

    def claim(self, g: Game, rounds: list, cfg: PgConfig) -> np.ndarray:
        """Best query seen so far; a blind uniform guess if there were none."""
        if not rounds:
            return np.concatenate([np.full(n, 1.0 / n) for n in g.strategy_counts])
        Q = np.array([r["query"] for r in rounds])
        return Q[int(np.argmin(regrets_float(g, Q)))].copy()


class GridBob(BobStrategy):
    """Low-discrepancy probes (Halton) mapped into the interior of X."""

    name = "grid"

    def next_query(self, g, rounds, cfg):
        i = len(rounds) + 1
        coords = [0.02 + 0.96 * _halton(i, _PRIMES[j % len(_PRIMES)]) for j in range(g.n)]
        out = []
        for sl in g.block_slices():
            e = -np.log(np.array(coords[sl]))
            out.append(e / e.sum())
        return np.concatenate(out)


class RandomBob(BobStrategy):
    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = make_rng(seed, "bob-random")

    def next_query(self, g, rounds, cfg):
        return uniform_profile(self.rng, g.strategy_counts)


class CheatBob(BobStrategy):
    """Skips the queries and solves the game directly."""

    name = "cheat"

    def claim(self, g, rounds, cfg):
        z = enumerate_nash(g)[0]
        return np.array([float(v) for v in z.flat()])


BOBS = {"grid": GridBob, "random": RandomBob, "cheat": CheatBob}


def make_bob(name: str, seed: int = 0) -> BobStrategy:
    if name not in BOBS:
        raise DomainError(f"unknown Bob strategy {name!r}")
    return RandomBob(seed) if name == "random" else BOBS[name]()


# -- transcript ----------------------------------------------------------------

@dataclass
class PgTranscript:
    config: PgConfig
    fingerprint: str
    rounds: list = field(default_factory=list)  # {"query": ndarray, "response": ndarray}
    claim: np.ndarray | None = None
    claim_regret: float | None = None
    claims_report: "ClaimsReport | None" = None
    phi_report: "PhiReport | None" = None
    prevail: str | None = None

    @property
    def queries(self) -> np.ndarray:
        if not self.rounds:
            return np.empty((0, 0))
        return np.array([r["query"] for r in self.rounds])

    @property
    def responses(self) -> np.ndarray:
        if not self.rounds:
            return np.empty((0, 0))
        return np.array([r["response"] for r in self.rounds])

    def to_json_obj(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "fingerprint": self.fingerprint,
            "rounds": [
                {"query": [format_float(v) for v in r["query"]],
                 "response": [format_float(v) for v in r["response"]]}
                for r in self.rounds
            ],
            "claim": None if self.claim is None else [format_float(v) for v in self.claim],
            "claim_regret": None if self.claim_regret is None else format_float(self.claim_regret),
            "claims_report": None if self.claims_report is None else self.claims_report.to_json_obj(),
            "phi_report": None if self.phi_report is None else self.phi_report.to_json_obj(),
            "prevail": self.prevail,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True)


# -- claims --------------------------------------------------------------------

@dataclass
class ClaimResult:
    passed: bool
    witnesses: list = field(default_factory=list)


@dataclass
class ClaimsReport:
    claim1: ClaimResult
    claim2: ClaimResult
    claim3: ClaimResult

    @property
    def passed(self) -> bool:
        return self.claim1.passed and self.claim2.passed and self.claim3.passed

    def to_json_obj(self) -> dict:
        return {f"claim{i}": {"passed": c.passed, "witnesses": _jsonable(c.witnesses)}
                for i, c in enumerate((self.claim1, self.claim2, self.claim3), 1)}


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(u) for u in v.tolist()]
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def successor_map(Q: np.ndarray, R: np.ndarray) -> dict:
    """``i -> j`` when response ``i`` is exactly query ``j`` (first match)."""
    succ = {}
    for i, r in enumerate(R):
        for j, q in enumerate(Q):
            if np.array_equal(r, q):
                succ[i] = j
                break
    return succ


def find_cycles(succ: dict) -> list:
    cycles, done = [], set()
    for start in succ:
        path, seen = [], {}
        i = start
        while i in succ and i not in done and i not in seen:
            seen[i] = len(path)
            path.append(i)
            i = succ[i]
        if i in seen:
            cycles.append(path[seen[i]:])
        done.update(path)
    return cycles


def chains(succ: dict, m: int) -> list:
    """Partition query indices into maximal successor chains (claims exclude cycles)."""
    has_pred = set(succ.values())
    out = []
    for i in range(m):
        if i in has_pred:
            continue
        chain = [i]
        while chain[-1] in succ:
            chain.append(succ[chain[-1]])
        out.append(chain)
    return out


def point_line_distance(z: np.ndarray, q: np.ndarray, d: np.ndarray) -> float:
    dd = float(d @ d)
    v = z - q
    if dd == 0.0:
        return float(np.linalg.norm(v))
    return float(np.linalg.norm(v - (v @ d) / dd * d))


def check_claims(g: Game, transcript: PgTranscript, equilibria=None) -> ClaimsReport:
    cfg = transcript.config
    Q, R = transcript.queries, transcript.responses
    if len(Q):
        regs = regrets_float(g, Q)
        w1 = [{"query": i, "regret": float(r)} for i, r in enumerate(regs) if r <= cfg.eps_r]
    else:
        w1 = []
    cycles = find_cycles(successor_map(Q, R))
    Zf = _equilibria_float(g, equilibria)
    w3 = []
    for i, (q, r) in enumerate(zip(Q, R)):
        for e, z in enumerate(Zf):
            dist = point_line_distance(z, q, r - q)
            if dist <= cfg.rho:
                w3.append({"query": i, "equilibrium": e, "distance": dist})
    return ClaimsReport(ClaimResult(not w1, w1), ClaimResult(not cycles, cycles),
                        ClaimResult(not w3, w3))


def _equilibria_float(g: Game, equilibria=None) -> np.ndarray:
    eqs = enumerate_nash(g) if equilibria is None else equilibria
    return np.array([[float(v) for v in e.flat()] for e in eqs])


def lemma52_check(g: Game, cycle, cfg: PgConfig, tol: float = 0.0) -> bool:
    """A closed orbit of Alice's map with diameter at most ``budget * eta`` consists of
    ``eps_r``-approximate equilibria.  Consecutive members must match within ``tol``."""
    P = np.asarray(cycle, dtype=float).reshape(-1, g.n)
    if not len(P):
        raise ProtocolError("empty cycle")
    nxt = np.roll(P, -1, axis=0)
    for a, b in zip(P, nxt):
        if float(np.max(np.abs(alice_respond(g, a, cfg) - b))) > tol:
            raise ProtocolError("input is not a cycle of Alice's map")
    if _diameter_exceeds(P, cfg.budget * cfg.eta):
        return True
    return bool(np.all(regrets_float(g, P) <= cfg.eps_r))


def _diameter_exceeds(P: np.ndarray, bound: float, chunk: int = 2048) -> bool:
    reach = float(np.max(np.linalg.norm(P - P[0], axis=1)))
    if reach > bound:
        return True
    if 2 * reach <= bound:
        return False
    for s in range(0, len(P), chunk):
        block = P[s:s + chunk]
        if np.max(np.linalg.norm(block[:, None, :] - P[None], axis=2)) > bound:
            return True
    return False


# -- Phi -----------------------------------------------------------------------

class PhiDynamic(Dynamic):
    """Alice's second-stage dynamic.

    Outside the query balls the point moves toward the target ``T``
    (``(T - x)/|T - x| * |x - N|/K`` truncated at ``T``, or the alternative
    ``(T - x)/2 * |x - N|`` rule).  Inside the ball of radius ``rho`` around a
    query ``q`` the displacement blends Alice's recorded answer with the
    outside field at the boundary point ``x'`` on the ray from ``q``:

        ((rho - r) * delta(q) + r * outside(x')) / rho,   r = |x - q|.

    Where balls overlap, these blends are averaged with weights
    ``(rho - r_i) / r_i``, which vanish on each boundary and dominate at each
    center.
    """

    name = "phi"

    def __init__(self, game: Game, queries, responses, cfg: PgConfig, equilibria=None):
        self.game = game
        self.cfg = cfg
        self.Q = np.asarray(queries, dtype=float).reshape(-1, game.n)
        self.R = np.asarray(responses, dtype=float).reshape(-1, game.n)
        self.D = self.R - self.Q
        self.Zf = _equilibria_float(game, equilibria)
        if not 0 <= cfg.target < len(self.Zf):
            raise DomainError(f"target {cfg.target} out of range for {len(self.Zf)} equilibria")
        self.T = self.Zf[cfg.target]

    def outside(self, X: np.ndarray) -> np.ndarray:
        """Outside displacement for each row of ``X``."""
        X = np.atleast_2d(X)
        near = np.min(np.linalg.norm(X[:, None, :] - self.Zf[None, :, :], axis=2), axis=1)
        diff = self.T - X
        dist = np.linalg.norm(diff, axis=1)
        if self.cfg.outside == "displayed":
            return diff / 2.0 * near[:, None]
        length = near / self.cfg.K
        safe = np.where(dist > 0, dist, 1.0)
        scale = np.where(length >= dist, 1.0, length / safe)
        return diff * scale[:, None]

    def _inside(self, x: np.ndarray, r: np.ndarray, idx: np.ndarray) -> np.ndarray:
        rho = self.cfg.rho
        blends, weights = [], []
        for i in idx:
            depth = (rho - r[i]) / rho
            boundary = self.Q[i] + (x - self.Q[i]) * (rho / r[i])
            blends.append(depth * self.D[i] + (1 - depth) * self.outside(boundary)[0])
            weights.append((rho - r[i]) / r[i])
        w = np.array(weights)
        return (w[:, None] * np.array(blends)).sum(axis=0) / w.sum()

    def step_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = X + self.outside(X)
        if len(self.Q):
            r = np.linalg.norm(X[:, None, :] - self.Q[None, :, :], axis=2)
            for row in np.nonzero((r < self.cfg.rho).any(axis=1))[0]:
                out[row] = self._step_in_balls(X[row], r[row])
        bad = np.nonzero(np.min(out, axis=1) < 0)[0]
        for row in bad:
            out[row] = project_profile(self.game, out[row])
        return out

    def _step_in_balls(self, x, r):
        hit = np.nonzero(r == 0)[0]
        if len(hit):
            return self.R[hit[0]].copy()
        idx = np.nonzero(r < self.cfg.rho)[0]
        y = x + self._inside(x, r, idx)
        return project_profile(self.game, y) if np.min(y) < 0 else y

    def step(self, x) -> np.ndarray:
        return self.step_batch(np.asarray(x, dtype=float).reshape(1, -1))[0]


def build_phi(g: Game, transcript: PgTranscript, equilibria=None, claims=None) -> PhiDynamic:
    claims = claims or check_claims(g, transcript, equilibria)
    if not claims.passed:
        raise ClaimsFailed("claims 1-3 must all pass before Phi can be built", claims)
    return PhiDynamic(g, transcript.queries, transcript.responses, transcript.config, equilibria)


@dataclass
class PhiReport:
    consistency: ClaimResult
    fixed_points: ClaimResult
    continuity: ClaimResult
    convergence: ClaimResult
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in (self.consistency, self.fixed_points,
                                      self.continuity, self.convergence))

    def to_json_obj(self) -> dict:
        return {
            **{name: {"passed": c.passed, "witnesses": _jsonable(c.witnesses[:10])}
               for name, c in (("consistency", self.consistency),
                               ("fixed_points", self.fixed_points),
                               ("continuity", self.continuity),
                               ("convergence", self.convergence))},
            "stats": _jsonable(self.stats),
            "passed": self.passed,
        }


def _tangent_directions(g: Game, rng, count: int) -> np.ndarray:
    V = rng.standard_normal((count, g.n))
    for sl in g.block_slices():
        V[:, sl] -= V[:, sl].mean(axis=1, keepdims=True)
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def _in_domain(X: np.ndarray) -> np.ndarray:
    return np.min(X, axis=1) >= 0


def verify_phi(g: Game, phi: PhiDynamic, transcript: PgTranscript, samples: int = 1000,
               seed: int = 0, fixed_samples: int | None = None, trajectories: int | None = None,
               max_iterations: int = 10000) -> PhiReport:
    """Empirical legitimacy checks for ``Phi``: consistency on the queries, no fixed
    points away from equilibria (also inside balls), bounded difference quotients
    across ball boundaries, and convergence from random starts."""
    cfg = transcript.config
    rng = make_rng(seed, "verify-phi")
    fixed_samples = samples if fixed_samples is None else fixed_samples
    trajectories = samples if trajectories is None else trajectories
    stats = {}

    # (a) consistency
    bad = [i for i, (q, r) in enumerate(zip(phi.Q, phi.R)) if not np.array_equal(phi.step(q), r)]
    consistency = ClaimResult(not bad, bad)

    # (b) no spurious fixed points
    X = np.array([uniform_profile(rng, g.strategy_counts) for _ in range(fixed_samples)])
    if len(phi.Q) and samples:
        centers = phi.Q[rng.integers(len(phi.Q), size=samples)]
        dim = g.n - g.num_players
        radii = cfg.rho * rng.random(samples) ** (1.0 / dim)
        inner = centers + radii[:, None] * _tangent_directions(g, rng, samples)
        X = np.vstack([X, inner[_in_domain(inner)]])
    regs = regrets_float(g, X)
    X = X[regs > cfg.eps_r]
    disp = np.linalg.norm(phi.step_batch(X) - X, axis=1)
    spurious = [{"x": X[i], "displacement": float(disp[i])} for i in np.nonzero(disp <= SPURIOUS_TOL)[0]]
    stats["fixed_point_samples"] = int(len(X))
    stats["min_displacement"] = float(disp.min()) if len(disp) else None
    fixed_points = ClaimResult(not spurious, spurious)

    # (c) continuity across ball boundaries: difference quotient at most 10 / rho
    h = cfg.rho * 1e-3
    worst = 0.0
    witnesses = []
    if len(phi.Q):
        m = min(samples, 1000)
        centers = phi.Q[rng.integers(len(phi.Q), size=m)]
        V = _tangent_directions(g, rng, m)
        mid = centers + cfg.rho * V
        A, B = mid - h / 2 * V, mid + h / 2 * V
        keep = _in_domain(A) & _in_domain(B)
        A, B = A[keep], B[keep]
        q = np.linalg.norm(phi.step_batch(A) - phi.step_batch(B), axis=1) / np.linalg.norm(A - B, axis=1)
        if len(q):
            worst = float(q.max())
            witnesses = [{"a": A[i], "b": B[i], "quotient": float(q[i])}
                         for i in np.nonzero(q > 10 / cfg.rho)[0]]
    stats["max_boundary_quotient_times_rho"] = worst * cfg.rho
    continuity = ClaimResult(not witnesses, witnesses)

    # (d) convergence from random starts
    X = np.array([uniform_profile(rng, g.strategy_counts) for _ in range(trajectories)])
    active = np.ones(len(X), dtype=bool)
    iterations = 0
    while active.any() and iterations < max_iterations:
        near = np.min(np.max(np.abs(X[active][:, None, :] - phi.Zf[None]), axis=2), axis=1)
        idx = np.nonzero(active)[0]
        active[idx[near <= CONVERGENCE_TOL]] = False
        if not active.any():
            break
        X[active] = phi.step_batch(X[active])
        iterations += 1
    stuck = [{"x": X[i]} for i in np.nonzero(active)[0]]
    stats["convergence_iterations"] = iterations
    convergence = ClaimResult(not stuck, stuck)
    return PhiReport(consistency, fixed_points, continuity, convergence, stats)


# -- the match -------------------------------------------------------------------

def run_match(g: Game, bob: BobStrategy, cfg: PgConfig, samples: int = 1000,
              fixed_samples: int | None = None, trajectories: int | None = None,
              equilibria=None) -> PgTranscript:
    """Play ``budget`` rounds, take Bob's claim, then let Alice defend with ``Phi``.

    Alice prevails iff the claim is not an ``eps_r``-equilibrium, Claims 1-3
    hold for the queries, and ``Phi`` passes verification.
    """
    equilibria = enumerate_nash(g) if equilibria is None else equilibria
    tr = PgTranscript(cfg, g.fingerprint)
    for _ in range(cfg.budget):
        x = bob.next_query(g, tr.rounds, cfg)
        if x is None:
            break
        x = np.asarray(x, dtype=float)
        if x.shape != (g.n,) or domain_violation(g, x) > 1e-9:
            raise ProtocolError("Bob queried a point outside the profile space")
        tr.rounds.append({"query": x, "response": alice_respond(g, x, cfg)})
    tr.claim = np.asarray(bob.claim(g, tr.rounds, cfg), dtype=float)
    tr.claim_regret = float(regret(g, tr.claim))
    tr.claims_report = check_claims(g, tr, equilibria)
    if tr.claims_report.passed:
        phi = build_phi(g, tr, equilibria, tr.claims_report)
        tr.phi_report = verify_phi(g, phi, tr, samples, cfg.seed, fixed_samples, trajectories)
    alice = (tr.claim_regret > cfg.eps_r and tr.claims_report.passed
             and tr.phi_report is not None and tr.phi_report.passed)
    tr.prevail = "alice" if alice else "bob"
    return tr


__all__ = [
    "BobStrategy",
    "CheatBob",
    "ClaimsReport",
    "GridBob",
    "PgConfig",
    "PgTranscript",
    "PhiDynamic",
    "PhiReport",
    "RandomBob",
    "alice_respond",
    "build_phi",
    "chains",
    "check_claims",
    "lemma52_check",
    "make_bob",
    "run_match",
    "verify_phi",
]
