"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import mpmath
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nashlab.affine import AffineSubspace, lambdas_of_equilibria, nash_on_line  # noqa: E402
from nashlab.algebraic import QuadraticRoot, compare_roots  # noqa: E402
from nashlab.dynamics import (  # noqa: E402
    BnnDynamic,
    LyapunovEvaluator,
    Type1Dynamic,
    Type2Dynamic,
    bnn_field,
    descend,
    fixed_point_consistent,
    lyapunov_type1,
    lyapunov_type2,
    run_trajectory,
)
from nashlab.equilibria import enumerate_nash, random_nondegenerate_game  # noqa: E402
from nashlab.errors import LyapunovViolation  # noqa: E402
from nashlab.game import matching_pennies, regret  # noqa: E402
from nashlab.proving_game import PgConfig, check_claims, make_bob, regrets_float, run_match  # noqa: E402
from nashlab.reductions import find_nash_via_type1, type1_oracle, type2_oracle, uniqueness_test  # noqa: E402
from nashlab.rng import make_rng, uniform_profile  # noqa: E402

from oracles import (  # noqa: E402
    doctored_transcripts,
    low_regret_regions,
    reference_respond,
    regions_far_from,
)

RESULTS = {}


def report(number, ok, detail):
    line = f"ACCEPTANCE {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line, flush=True)
    return ok


def as_float(eqs):
    return np.array([[float(v) for v in e.flat()] for e in eqs])


def dynamics_panel():
    """Ten 3x3 games: the first five with one equilibrium and the first five with
    three or more, scanning seeds upward from 2000."""
    single, multi, seed = [], [], 2000
    while len(single) < 5 or len(multi) < 5:
        g = random_nondegenerate_game(3, 3, seed)
        eqs = enumerate_nash(g)
        bucket = single if len(eqs) == 1 else multi
        if len(bucket) < 5:
            bucket.append((seed, g, eqs))
        seed += 1
    return single + multi


def random_tangent_line(g, rng, through=None):
    if through is None:
        base = []
        for n in g.strategy_counts:
            w = [int(v) for v in rng.integers(1, 50, size=n)]
            base += [F(v, sum(w)) for v in w]
    else:
        base = list(through)
    d = []
    for n in g.strategy_counts:
        v = [F(int(a)) for a in rng.integers(-9, 10, size=n)]
        mean = sum(v) / n
        d += [a - mean for a in v]
    if not any(d):
        d[0], d[1] = F(1), F(-1)
    return AffineSubspace.line(base, d)


# -- 1 -------------------------------------------------------------------------

def test_01_oddness():
    start = time.perf_counter()
    even = []
    counts = {}
    for n in (2, 3, 4):
        for s in range(100):
            k = len(enumerate_nash(random_nondegenerate_game(n, n, 10000 + s)))
            counts[k] = counts.get(k, 0) + 1
            if k % 2 == 0:
                even.append((n, s, k))
    elapsed = time.perf_counter() - start
    ok = not even and elapsed < 60
    assert report(1, ok, f"300 games, counts {dict(sorted(counts.items()))}, even {even}, {elapsed:.1f}s < 60s")


# -- 2 -------------------------------------------------------------------------

def test_02_soundness_completeness():
    nonzero = 0
    far_games = []
    for n in (2, 3):
        for s in range(10):
            seed = 1000 + s
            g = random_nondegenerate_game(n, n, seed)
            eqs = enumerate_nash(g)
            nonzero += sum(regret(g, e.profile) != 0 for e in eqs)
            regions = low_regret_regions(g, N=200, threshold=0.01)
            far = regions_far_from(regions, as_float(eqs), distance=0.05)
            for R, d in far:
                # the best point of a far region stays clear of regret 0
                far_games.append(f"{n}x{n}/seed {seed}: {len(R)} pts at L-inf {d:.3f}, "
                                 f"min regret {regrets_float(g, R).min():.4f}")
    ok = nonzero == 0 and not far_games
    detail = f"20 games, nonzero-regret equilibria {nonzero}, far low-regret regions {len(far_games)}"
    if far_games:
        detail += " [" + "; ".join(far_games) + "]"
    assert report(2, ok, detail)


# -- 3 -------------------------------------------------------------------------

def test_03_line_solver():
    rng = make_rng(3, "acceptance-lines")
    mismatch = []
    shapes = [(2, 2), (2, 3), (3, 3), (3, 4)]
    for i in range(200):
        g = random_nondegenerate_game(*shapes[i % 4], 3000 + i)
        eqs = enumerate_nash(g)
        line = random_tangent_line(g, rng)
        got = {p.lo.as_fraction() for p in nash_on_line(g, line).pieces if p.kind == "point"}
        intervals = [p for p in nash_on_line(g, line).pieces if p.kind != "point"]
        if intervals or got != set(lambdas_of_equilibria(g, line, eqs)):
            mismatch.append(i)
    missed = []
    for i in range(50):
        g = random_nondegenerate_game(*shapes[i % 4], 3500 + i)
        eqs = enumerate_nash(g)
        z = eqs[int(rng.integers(len(eqs)))].flat()
        line = random_tangent_line(g, rng, through=z)
        sol = nash_on_line(g, line)
        if not sol.contains(0):
            missed.append(i)
    ok = not mismatch and not missed
    assert report(3, ok, f"200 random lines, mismatches {len(mismatch)}; 50 lines through an equilibrium, "
                         f"missed {len(missed)}")


# -- 4 -------------------------------------------------------------------------

def test_04_algebraic_ordering():
    mpmath.mp.dps = 64
    rng = make_rng(4, "acceptance-roots")

    def draw():
        p, q = (int(v) for v in rng.integers(-10 ** 6, 10 ** 6, size=2))
        return QuadraticRoot(p, q, int(rng.integers(0, 200)), int(rng.integers(1, 10 ** 4)))

    def value(r):
        return (mpmath.mpf(r.p) + mpmath.mpf(r.q) * mpmath.sqrt(r.s)) / r.r

    disagree = 0
    ties = 0
    for i in range(10 ** 4):
        a = draw()
        if i % 10 == 0:
            # an exact tie written differently: scale numerator and denominator
            m = int(rng.integers(2, 9))
            b = QuadraticRoot(a.p * m, a.q, a.s * m * m, a.r * m)
        elif i % 10 == 1:
            # a near tie: nudge the rational part by one unit
            b = QuadraticRoot(a.p + 1, a.q, a.s, a.r)
        else:
            b = draw()
        diff = value(a) - value(b)
        expected = 0 if abs(diff) < mpmath.mpf(10) ** -50 else (1 if diff > 0 else -1)
        ties += expected == 0
        disagree += compare_roots(a, b) != expected
    assert report(4, disagree == 0, f"10^4 pairs ({ties} exact ties), disagreements {disagree}")


# -- 5, 6 ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def panel():
    return dynamics_panel()


def test_05_type1(panel):
    rng = make_rng(5, "acceptance-type1")
    failures, increases, runs = [], 0, 0
    for seed, g, eqs in panel:
        target = len(eqs) - 1
        dyn = Type1Dynamic(g, eqs, target=target)
        for _ in range(50):
            tr = run_trajectory(dyn, uniform_profile(rng, g.strategy_counts), eps_fix=1e-9)
            runs += 1
            err = float(np.max(np.abs(tr.final - dyn.zf)))
            if tr.reason != "converged" or err > 1e-6:
                failures.append((seed, tr.reason, err))
            L = [lyapunov_type1(dyn, x) for x in tr.profiles]
            increases += sum(b >= a for a, b in zip(L, L[1:]))
    ok = not failures and increases == 0
    assert report(5, ok, f"{runs} trajectories, non-converged {len(failures)}, "
                         f"Lyapunov non-decreases {increases}")


def test_06_type2(panel):
    rng = make_rng(6, "acceptance-type2")
    failures, fp_bad, runs = [], 0, 0
    dyns = []
    for seed, g, eqs in panel:
        dyn = Type2Dynamic(g, eqs, seed=seed)
        dyns.append((g, dyn))
        Z = as_float(eqs)
        for _ in range(50):
            tr = run_trajectory(dyn, uniform_profile(rng, g.strategy_counts), eps_fix=1e-9)
            runs += 1
            err = float(np.min(np.max(np.abs(Z - tr.final), axis=1)))
            if tr.reason != "converged" or err > 1e-6:
                failures.append((seed, tr.reason, err))
        points = [e.flat() for e in eqs] + [uniform_profile(rng, g.strategy_counts) for _ in range(100)]
        fp_bad += sum(not fixed_point_consistent(dyn, x) for x in points)
    decreases, checked, witnesses = 0, 0, []
    while checked < 1000:
        g, dyn = dyns[checked % len(dyns)]
        x = uniform_profile(rng, g.strategy_counts)
        if float(regret(g, x)) <= 1e-9:
            continue
        checked += 1
        before, after = lyapunov_type2(dyn, x), lyapunov_type2(dyn, dyn.step(x))
        if after < before:
            decreases += 1
        elif len(witnesses) < 3:
            witnesses.append(f"{dyn.region(x)} {before:.4g}->{after:.4g}")
    frac = decreases / checked
    ok = not failures and fp_bad == 0 and frac >= 0.95
    assert report(6, ok, f"{runs} trajectories, non-converged {len(failures)}, fixed-point mismatches "
                         f"{fp_bad}, Lyapunov decrease {frac:.1%} of {checked} (>= 95%); "
                         f"sample non-decreases {witnesses}")


# -- 7 -------------------------------------------------------------------------

def test_07_bnn(panel):
    rng = make_rng(7, "acceptance-bnn")
    nonzero_at_eq = sum(bool(np.any(bnn_field(g, e.flat()))) for _, g, eqs in panel for e in eqs)
    small, checked = 0, 0
    while checked < 1000:
        _, g, _ = panel[checked % len(panel)]
        x = uniform_profile(rng, g.strategy_counts)
        if float(regret(g, x)) <= 1e-2:
            continue
        checked += 1
        small += float(np.linalg.norm(bnn_field(g, x))) <= 1e-9
    mp = matching_pennies()
    tr = run_trajectory(BnnDynamic(mp, 0.01), [0.9, 0.1, 0.2, 0.8], max_steps=10 ** 5,
                        record_lyapunov=False)
    ok = nonzero_at_eq == 0 and small == 0 and tr.reason == "step-limit"
    assert report(7, ok, f"field nonzero at {nonzero_at_eq} equilibria, <= 1e-9 at {small}/1000 "
                         f"high-regret profiles, Matching Pennies run ended '{tr.reason}' after "
                         f"{tr.total_steps} steps")


# -- 8 -------------------------------------------------------------------------

def test_08_reductions():
    bad_find = []
    for s in range(20):
        g = random_nondegenerate_game(3, 3, 8000 + s)
        eqs = enumerate_nash(g)
        oracle = type1_oracle(g, eqs, target=s % len(eqs))
        z = find_nash_via_type1(g, oracle, seed=s)
        if regret(g, list(z)) != 0 or oracle.count != 1:
            bad_find.append(s)
    unique, multiple, seed = [], [], 8100
    while len(unique) < 10 or len(multiple) < 10:
        g = random_nondegenerate_game(3, 3, seed)
        eqs = enumerate_nash(g)
        if len(eqs) == 1 and len(unique) < 10:
            unique.append((g, eqs, "unique"))
        elif len(eqs) == 3 and len(multiple) < 10:
            multiple.append((g, eqs, "multiple"))
        seed += 1
    correct = 0
    for i, (g, eqs, truth) in enumerate(unique + multiple):
        for run in range(5):
            v = uniqueness_test(g, type2_oracle(g, eqs, seed=run), trials=20, seed=100 * i + run)
            correct += v.verdict == truth
    ok = not bad_find and correct >= 95
    assert report(8, ok, f"find-nash failures {len(bad_find)}/20; uniqueness correct {correct}/100 (>= 95)")


# -- 9 -------------------------------------------------------------------------

def test_09_descent():
    mp = matching_pennies()
    eqs = enumerate_nash(mp)
    dyn = Type1Dynamic(mp, eqs)
    eps = 1e-9
    bound = dyn.k * math.log(1 / eps) * 10
    res = descend(dyn, LyapunovEvaluator.of(dyn), [1.0, 0.0, 1.0, 0.0], eps_fix=eps)
    err = float(np.max(np.abs(res.profile - 0.5)))
    try:
        descend(dyn, LyapunovEvaluator.of(dyn).negated(), [1.0, 0.0, 1.0, 0.0], eps_fix=eps)
        flagged = None
    except LyapunovViolation as exc:
        flagged = exc.step
    ok = res.steps <= bound and err <= 1e-6 and flagged == 1
    assert report(9, ok, f"{res.steps} steps <= {bound:.0f}, distance {err:.1e}, "
                         f"negated Lyapunov flagged at step {flagged}")


# -- 10 ------------------------------------------------------------------------

def test_10_proving_game():
    mismatched_responses, phi_failed, verdict_wrong, honest = 0, [], 0, 0
    phi_checked, bob_found = 0, []
    start = time.perf_counter()
    for m in range(20):
        size = (2, 2) if m % 2 == 0 else (3, 3)
        g = random_nondegenerate_game(*size, 9000 + m)
        eqs = enumerate_nash(g)
        bob = ("grid", "random", "cheat")[m % 3] if m < 18 else "random"
        cfg = PgConfig(budget=32, seed=m, target=m % len(eqs))
        tr = run_match(g, make_bob(bob, m), cfg, samples=1000, fixed_samples=10 ** 4,
                       trajectories=10 ** 3, equilibria=eqs)
        for r in tr.rounds:
            mismatched_responses += not np.array_equal(r["response"], reference_respond(g, r["query"], cfg.eta))
        if bob != "cheat":
            honest += 1
            if tr.claims_report.passed:
                phi_checked += 1
                if tr.phi_report is None or not tr.phi_report.passed:
                    phi_failed.append(m)
            else:
                # Bob's own probes hit an eps_r-equilibrium: Phi is undefined, Bob prevails
                bob_found.append(m)
                verdict_wrong += tr.prevail != "bob"
        expected = ("alice" if tr.claim_regret > cfg.eps_r and tr.claims_report.passed
                    and tr.phi_report is not None and tr.phi_report.passed else "bob")
        verdict_wrong += tr.prevail != expected or (tr.claim_regret <= cfg.eps_r and tr.prevail != "bob")
    claim_wrong = 0
    for _, claim, g, tr in doctored_transcripts():
        rep = check_claims(g, tr)
        verdicts = [rep.claim1.passed, rep.claim2.passed, rep.claim3.passed]
        claim_wrong += verdicts[claim - 1]
    elapsed = time.perf_counter() - start
    ok = mismatched_responses == 0 and not phi_failed and verdict_wrong == 0 and claim_wrong == 0
    assert report(10, ok, f"20 matches ({honest} honest), response mismatches {mismatched_responses}, "
                          f"Phi verified on {phi_checked - len(phi_failed)}/{phi_checked} honest matches with "
                          f"claims 1-3 holding (Bob probed an eps_r-equilibrium in matches {bob_found}), "
                          f"wrong verdicts {verdict_wrong}, "
                          f"doctored transcripts misjudged {claim_wrong}/6, {elapsed:.0f}s")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
