"""Command-line interface: ``nashlab <group> <command> [options]``.

Every command writes its artifacts plus a ``manifest.json`` into ``--output``.
Exit codes: 0 success, 2 bad arguments or input, 3 domain error, 4 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .affine import AffineSubspace, nash_on_affine, nash_on_line
from .dynamics import (
    DEFAULT_ALPHA,
    DEFAULT_EPS_FIX,
    DEFAULT_K,
    DEFAULT_MAX_STEPS,
    BnnDynamic,
    Type1Dynamic,
    Type2Dynamic,
    run_trajectory,
)
from .equilibria import MAX_STRATEGIES, enumerate_nash, equilibrium_set_json, random_nondegenerate_game
from .errors import DomainError, InvariantViolation, NashLabError
from .game import BUILTINS, Game, as_flat, format_float, format_rational, parse_rational, regret
from .proving_game import PgConfig, make_bob, run_match
from .reductions import find_nash_via_type1, type1_oracle, type2_oracle, uniqueness_test
from .rng import GENERATOR_NAME, make_rng, seed_from_env, uniform_profile

EXIT_OK, EXIT_ARGS, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


# -- io ----------------------------------------------------------------------

def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_game(path) -> Game:
    return Game.from_dict(_read_json(path))


def _load_subspace(path) -> AffineSubspace:
    return AffineSubspace.from_dict(_read_json(path))


def _write(out_dir: Path, name: str, text: str, outputs: list):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    outputs.append(str(path))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _parse_profile_value(v):
    if isinstance(v, str):
        return parse_rational(v)
    return float(v)


def _load_start(g: Game, source: str, seed: int) -> np.ndarray:
    if source == "random":
        return uniform_profile(make_rng(seed, "cli-start"), g.strategy_counts)
    data = _read_json(source)
    if isinstance(data, dict):
        data = data.get("profile", data)
    if data and isinstance(data[0], list):
        data = [_parse_profile_value(v) for block in data for v in block]
    else:
        data = [_parse_profile_value(v) for v in data]
    return np.array([float(v) for v in as_flat(g, data)])


# -- commands -----------------------------------------------------------------

def cmd_game_gen(args, out: Path, outputs: list):
    if args.builtin:
        g = BUILTINS[args.builtin]()
    else:
        if args.rows is None or args.cols is None:
            raise UsageError("give --builtin or both --rows and --cols")
        g = random_nondegenerate_game(args.rows, args.cols, args.seed)
    _write(out, "game.json", _dump(g.to_dict()), outputs)


def cmd_solve(args, out: Path, outputs: list):
    g = _load_game(args.game)
    if args.command == "enum":
        eqs = enumerate_nash(g, jobs=args.jobs)
        _write(out, "equilibria.json", _dump(equilibrium_set_json(eqs)), outputs)
        return
    space = _load_subspace(args.subspace)
    if args.command == "line":
        sol = nash_on_line(g, space)
    else:
        sol = nash_on_affine(g, space, jobs=args.jobs)
    _write(out, "solution.json", _dump(sol.to_json_obj()), outputs)


def _make_dynamic(args, g: Game):
    if args.type == "bnn":
        return BnnDynamic(g, args.eta)
    eqs = enumerate_nash(g, jobs=args.jobs)
    if args.type == "1":
        return Type1Dynamic(g, eqs, args.target, args.k)
    return Type2Dynamic(g, eqs, seed=args.seed, alpha=args.alpha, k=args.k)


def cmd_dyn(args, out: Path, outputs: list):
    g = _load_game(args.game)
    dyn = _make_dynamic(args, g)
    if args.command == "run":
        x0 = _load_start(g, args.start, args.seed)
        tr = run_trajectory(dyn, x0, args.eps_fix, args.max_steps,
                            record_lyapunov=args.type != "bnn")
        tr.meta["final_regret"] = format_float(float(regret(g, tr.final)))
        _write(out, "trajectory.csv", tr.to_csv(), outputs)
        return
    rng = make_rng(args.seed, "cli-verify-lyapunov")
    decreases, witnesses, checked = 0, [], 0
    for _ in range(args.samples):
        x = uniform_profile(rng, g.strategy_counts)
        if float(regret(g, x)) <= 1e-9:
            continue
        checked += 1
        before, after = dyn.lyapunov(x), dyn.lyapunov(dyn.step(x))
        if after < before:
            decreases += 1
        elif len(witnesses) < 20:
            witnesses.append({"x": [format_float(v) for v in x],
                              "before": format_float(before), "after": format_float(after)})
    report = {
        "type": args.type,
        "samples": checked,
        "decreases": decreases,
        "fraction": format_float(decreases / checked if checked else 1.0),
        "violations": witnesses,
    }
    _write(out, "lyapunov_report.json", _dump(report), outputs)


def cmd_reduce(args, out: Path, outputs: list):
    g = _load_game(args.game)
    eqs = enumerate_nash(g, jobs=args.jobs)
    if args.command == "find-nash":
        oracle = type1_oracle(g, eqs, args.target, args.k)
        z = find_nash_via_type1(g, oracle, seed=args.seed)
        result = {"profile": [format_rational(v) for v in z],
                  "regret": format_rational(regret(g, z)), "queries": oracle.count}
        _write(out, "equilibrium.json", _dump(result), outputs)
        return
    oracle = type2_oracle(g, eqs, seed=args.seed, alpha=args.alpha, k=args.k)
    verdict = uniqueness_test(g, oracle, args.trials, seed=args.seed)
    _write(out, "verdict.json", _dump(verdict.to_json_obj()), outputs)


def cmd_pg(args, out: Path, outputs: list):
    g = _load_game(args.game)
    cfg = PgConfig(budget=args.budget, eps_r=args.eps_r, eta=args.eta, rho=args.rho,
                   target=args.target, seed=args.seed, K=args.K, outside=args.outside)
    tr = run_match(g, make_bob(args.bob, args.seed), cfg, samples=args.samples)
    _write(out, "transcript.json", tr.to_json() + "\n", outputs)


def cmd_replay(args, out: Path, outputs: list):
    manifest = _read_json(args.manifest)
    argv = list(manifest["argv"])
    if args.output_override:
        argv = _replace_output(argv, args.output_override)
    code = main(argv)
    if code:
        raise UsageError(f"replayed command exited with {code}")


def _replace_output(argv, new):
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--output":
            skip = True
            continue
        if a.startswith("--output="):
            continue
        out.append(a)
    return out + ["--output", new]


# -- parser -----------------------------------------------------------------------

def _sizes(text):
    v = int(text)
    if not 2 <= v <= MAX_STRATEGIES:
        raise argparse.ArgumentTypeError(f"must lie in 2..{MAX_STRATEGIES}")
    return v


def _nonnegative_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", default=".", help="directory for outputs (default: .)")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed (default: $NDL_SEED or 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for support scans")

    p = argparse.ArgumentParser(prog="nashlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nashlab {__version__}")
    groups = p.add_subparsers(dest="group", required=True)

    game = groups.add_parser("game").add_subparsers(dest="command", required=True)
    gen = game.add_parser("gen", parents=[common], help="write a game file")
    gen.add_argument("--builtin", choices=sorted(BUILTINS))
    gen.add_argument("--rows", type=_sizes)
    gen.add_argument("--cols", type=_sizes)
    gen.set_defaults(func=cmd_game_gen)

    solve = groups.add_parser("solve").add_subparsers(dest="command", required=True)
    for name in ("enum", "line", "affine"):
        sp = solve.add_parser(name, parents=[common])
        sp.add_argument("--game", required=True)
        if name != "enum":
            sp.add_argument("--subspace", required=True)
        sp.set_defaults(func=cmd_solve)

    dyn = groups.add_parser("dyn").add_subparsers(dest="command", required=True)
    for name, types in (("run", ("1", "2", "bnn")), ("verify-lyapunov", ("1", "2"))):
        sp = dyn.add_parser(name, parents=[common])
        sp.add_argument("--game", required=True)
        sp.add_argument("--type", choices=types, required=True)
        sp.add_argument("--k", type=float, default=DEFAULT_K)
        sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
        sp.add_argument("--eta", type=float, default=0.01)
        sp.add_argument("--target", type=int, default=0)
        if name == "run":
            sp.add_argument("--start", default="random", help="'random' or a JSON profile file")
            sp.add_argument("--eps-fix", type=float, default=DEFAULT_EPS_FIX)
            sp.add_argument("--max-steps", type=_nonnegative_int, default=DEFAULT_MAX_STEPS)
        else:
            sp.add_argument("--samples", type=_nonnegative_int, default=1000)
        sp.set_defaults(func=cmd_dyn)

    red = groups.add_parser("reduce").add_subparsers(dest="command", required=True)
    for name in ("find-nash", "uniqueness"):
        sp = red.add_parser(name, parents=[common])
        sp.add_argument("--game", required=True)
        sp.add_argument("--k", type=float, default=DEFAULT_K)
        sp.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
        sp.add_argument("--target", type=int, default=0)
        if name == "uniqueness":
            sp.add_argument("--trials", type=int, default=20)
        sp.set_defaults(func=cmd_reduce)

    pg = groups.add_parser("pg").add_subparsers(dest="command", required=True)
    sp = pg.add_parser("run", parents=[common])
    sp.add_argument("--game", required=True)
    sp.add_argument("--bob", choices=("grid", "random", "cheat"), default="grid")
    sp.add_argument("--budget", type=_nonnegative_int, default=32)
    sp.add_argument("--eta", type=float, default=1e-3)
    sp.add_argument("--rho", type=float, default=1e-4)
    sp.add_argument("--eps-r", type=float, default=1e-2)
    sp.add_argument("--target", type=int, default=0)
    sp.add_argument("--K", type=float, default=2.0)
    sp.add_argument("--outside", choices=("type1", "displayed"), default="type1")
    sp.add_argument("--samples", type=_nonnegative_int, default=1000)
    sp.set_defaults(func=cmd_pg)

    rp = groups.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--output", dest="output_override", default=None)
    rp.set_defaults(func=cmd_replay, command=None)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", 0) is None:
        args.seed = seed_from_env()
        argv = argv + ["--seed", str(args.seed)]  # the manifest must replay without the env
    out = Path(getattr(args, "output", ".") or ".")
    outputs: list = []
    start = time.perf_counter()
    try:
        args.func(args, out, outputs)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except InvariantViolation as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        witness = getattr(exc, "witness", None)
        if witness is not None:
            print(f"witness: {json.dumps(witness.to_strings())}", file=sys.stderr)
        return EXIT_DOMAIN
    except NashLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    if args.group != "replay":
        params = {k: v for k, v in vars(args).items() if k != "func"}
        manifest = {
            "subcommand": f"{args.group} {args.command}",
            "parameters": params,
            "seed": args.seed,
            "argv": argv,
            "inputs": [params[k] for k in ("game", "subspace") if params.get(k)]
            + ([params["start"]] if params.get("start") not in (None, "random") else []),
            "outputs": list(outputs),
            "generator": GENERATOR_NAME,
            "version": __version__,
            "wall_time": format_float(time.perf_counter() - start),
        }
        _write(out, "manifest.json", _dump(manifest), [])
        for path in outputs:
            print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
