import math
from fractions import Fraction as F

import numpy as np
import pytest

from nashlab.dynamics import (
    BnnDynamic,
    LyapunovEvaluator,
    Type1Dynamic,
    Type2Dynamic,
    bnn_field,
    bnn_step,
    descend,
    fixed_point_consistent,
    lyapunov_type1,
    lyapunov_type2,
    project_simplex,
    run_trajectory,
)
from nashlab.equilibria import enumerate_nash, random_nondegenerate_game
from nashlab.errors import DomainError, LyapunovViolation, StepLimitExceeded
from nashlab.game import battle_of_sexes, matching_pennies, regret
from nashlab.rng import make_rng, uniform_profile

CORNER = np.array([1.0, 0.0, 1.0, 0.0])
UNIFORM = np.array([0.5, 0.5, 0.5, 0.5])


def three_eq_games(count, size=3):
    out, seed = [], 0
    while len(out) < count:
        g = random_nondegenerate_game(size, size, 7000 + seed)
        eqs = enumerate_nash(g)
        if len(eqs) >= 3:
            out.append((g, eqs))
        seed += 1
    return out


def test_type1_examples():
    mp = matching_pennies()
    dyn = Type1Dynamic(mp, enumerate_nash(mp), k=10)
    np.testing.assert_allclose(dyn.step(CORNER), [0.95, 0.05, 0.95, 0.05], atol=1e-15)
    assert lyapunov_type1(dyn, CORNER) == pytest.approx(1.0)
    assert lyapunov_type1(dyn, UNIFORM) == 0.0
    assert np.array_equal(dyn.step(UNIFORM), UNIFORM)
    bos = battle_of_sexes()
    eqs = enumerate_nash(bos)
    pure11 = [i for i, e in enumerate(eqs) if e.flat()[0] == 1][0]
    x = np.array([0.0, 1.0, 0.0, 1.0])
    assert np.array_equal(Type1Dynamic(bos, eqs, target=pure11).step(x), x)


def test_type1_exact_step_is_on_segment():
    mp = matching_pennies()
    dyn = Type1Dynamic(mp, enumerate_nash(mp))
    y = dyn.step_exact([F(1), F(0), F(1), F(0)])
    assert y[0] == y[2] and sum(y[:2]) == 1
    assert F(1, 2) < y[0] < 1


def test_type2_examples():
    mp = matching_pennies()
    dyn = Type2Dynamic(mp, enumerate_nash(mp))
    y = dyn.step(CORNER)
    assert (y - CORNER) @ (UNIFORM - CORNER) > 0
    assert lyapunov_type2(dyn, CORNER) == pytest.approx(1.0)
    g, eqs = three_eq_games(1)[0]
    dyn = Type2Dynamic(g, eqs, seed=1)
    for z in dyn.Zf:
        assert np.array_equal(dyn.step(z), z)
        assert lyapunov_type2(dyn, z) == 0.0
    # a point on the slice through the middle equilibrium contracts toward it
    z = dyn.Zf[1]
    rng = make_rng(3, "slice")
    for _ in range(20):
        x = uniform_profile(rng, g.strategy_counts)
        x = x + (dyn.tf[1] - dyn.t_of(x)) * dyn.w * 0  # keep x, then move it onto the slice
        t = dyn.t_of(x)
        on = x + (dyn.tf[1] - t) * dyn.w
        if on.min() < 0:
            continue
        y = dyn.step(on)
        assert np.linalg.norm(y - z) < np.linalg.norm(on - z)
        np.testing.assert_allclose(y, on + dyn.alpha * (z - on), atol=1e-9)


def test_type2_rejects_bad_parameters():
    mp = matching_pennies()
    eqs = enumerate_nash(mp)
    with pytest.raises(DomainError):
        Type2Dynamic(mp, eqs, alpha=1.0)
    with pytest.raises(DomainError):
        Type2Dynamic(battle_of_sexes(), list(enumerate_nash(battle_of_sexes()))[:2])
    with pytest.raises(DomainError):
        Type1Dynamic(mp, [])


def test_bnn_examples():
    mp = matching_pennies()
    np.testing.assert_array_equal(bnn_field(mp, CORNER), [0, 0, -1, 1])
    np.testing.assert_array_equal(bnn_field(mp, UNIFORM), [0, 0, 0, 0])
    np.testing.assert_allclose(bnn_step(mp, CORNER, 0.1), [1, 0, 0.9, 0.1], atol=1e-15)
    for eta in (1e-3, 1e-6):
        disp = (bnn_step(mp, [0.3, 0.7, 0.6, 0.4], eta) - np.array([0.3, 0.7, 0.6, 0.4])) / eta
        np.testing.assert_allclose(disp, bnn_field(mp, [0.3, 0.7, 0.6, 0.4]), atol=1e-8)
    with pytest.raises(DomainError):
        bnn_step(mp, CORNER, 0.0)
    for g, eqs in three_eq_games(3):
        for e in eqs:
            assert not np.any(bnn_field(g, e.flat()))


def test_fixed_point_exactness_and_mass():
    rng = make_rng(5, "fixed")
    for g, eqs in three_eq_games(3):
        dyns = [Type1Dynamic(g, eqs), Type2Dynamic(g, eqs), BnnDynamic(g, 0.01)]
        for dyn in dyns:
            for e in eqs:
                assert fixed_point_consistent(dyn, e.flat())
            for _ in range(100):
                x = uniform_profile(rng, g.strategy_counts)
                assert fixed_point_consistent(dyn, x)
                y = dyn.step(x)
                for sl in g.block_slices():
                    assert abs(y[sl].sum() - 1) <= 1e-12
                assert y.min() >= 0
        x = [F(1, 3)] * 6
        for y in (Type1Dynamic(g, eqs).step_exact(x), Type2Dynamic(g, eqs).step_exact(x)):
            assert sum(y[:3]) == 1 and sum(y[3:]) == 1


def test_type2_continuity_across_boundaries():
    rng = make_rng(6, "cont")
    worst = 0.0
    for g, eqs in three_eq_games(3):
        dyn = Type2Dynamic(g, eqs)
        for _ in range(300):
            x = uniform_profile(rng, g.strategy_counts)
            b = dyn.tf[int(rng.integers(len(dyn.tf)))]
            x = x + (b - dyn.t_of(x)) * dyn.w
            if x.min() < 1e-6:
                continue
            delta = 1e-7 * dyn.w
            a, c = x - delta, x + delta
            worst = max(worst, np.linalg.norm(dyn.step(a) - dyn.step(c)) / np.linalg.norm(a - c))
    assert worst <= 10


def test_convergence_panel():
    rng = make_rng(7, "conv")
    for g, eqs in three_eq_games(2):
        Z = np.array([[float(v) for v in e.flat()] for e in eqs])
        for dyn in (Type1Dynamic(g, eqs, target=1), Type2Dynamic(g, eqs)):
            for _ in range(10):
                tr = run_trajectory(dyn, uniform_profile(rng, g.strategy_counts))
                assert tr.reason == "converged"
                assert np.min(np.max(np.abs(Z - tr.final), axis=1)) <= 1e-6
                if dyn.name == "type1":
                    assert np.max(np.abs(tr.final - Z[1])) <= 1e-6
                    assert all(b < a for a, b in zip(tr.lyapunov, tr.lyapunov[1:]))


def test_trajectory_shapes_and_csv():
    mp = matching_pennies()
    dyn = Type1Dynamic(mp, enumerate_nash(mp))
    tr = run_trajectory(dyn, UNIFORM)
    assert len(tr.profiles) == 1 and tr.reason == "converged"
    tr = run_trajectory(dyn, CORNER)
    text = tr.to_csv()
    lines = text.splitlines()
    assert lines[0] == "step,coord_0,coord_1,coord_2,coord_3,lyapunov,displacement"
    assert lines[-1].startswith("# {") and '"reason": "converged"' in lines[-1]
    assert len(lines) == len(tr.profiles) + 2
    tr = run_trajectory(dyn, CORNER, max_steps=5)
    assert tr.reason == "step-limit" and tr.total_steps == 5


def test_bnn_matching_pennies_cycles():
    mp = matching_pennies()
    tr = run_trajectory(BnnDynamic(mp, 0.01), [0.9, 0.1, 0.2, 0.8], max_steps=10 ** 5,
                        record_lyapunov=False)
    assert tr.reason == "step-limit"
    assert tr.total_steps == 10 ** 5
    # thinned beyond 10^4 steps
    assert len(tr.profiles) == 1 + 10 ** 4 + 900


def test_descend():
    mp = matching_pennies()
    dyn = Type1Dynamic(mp, enumerate_nash(mp))
    L = LyapunovEvaluator.of(dyn)
    res = descend(dyn, L, CORNER, eps_fix=1e-9)
    assert np.max(np.abs(res.profile - UNIFORM)) <= 1e-6
    assert res.steps <= 10 * math.log(1e9) * 10
    assert res.regret <= 1e-6
    res = descend(dyn, L, UNIFORM)
    assert res.steps == 1 and np.array_equal(res.profile, UNIFORM)
    with pytest.raises(LyapunovViolation) as info:
        descend(dyn, L.negated(), CORNER)
    assert info.value.step == 1
    with pytest.raises(StepLimitExceeded):
        descend(dyn, L, CORNER, max_steps=3)


def test_project_simplex():
    np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0])), [1, 0])
    np.testing.assert_allclose(project_simplex(np.array([0.3, 0.7])), [0.3, 0.7])
    assert regret(matching_pennies(), UNIFORM) == 0
