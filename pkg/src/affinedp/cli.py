"""Command-line entry point.

Every subcommand reads a JSON problem file (see :mod:`affinedp.problem`),
runs one operation and prints a JSON run report.  Exit codes: 0 success,
1 solver or validation error (reported with the error's class name),
2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import classify, expssp, instances, lp, policy_eval, solvers
from .core import apply_bellman_map, check_policy, policy_space
from .errors import AffineDPError
from .problem import ProblemFile, chain_problem, jsonable, parse_problem, write_problem


class UsageError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not np.isfinite(vals).all():
        raise argparse.ArgumentTypeError("values must be finite")
    return vals


def _pick(value, default):
    return default if value is None else value


def _need_chain(problem: ProblemFile, command: str):
    if problem.chain is None:
        raise UsageError(f"{command} needs an exponential, multiplicative or shortest-path problem")
    return problem.chain


def _seeded_chain(args) -> ProblemFile:
    rng = np.random.default_rng(_pick(args.seed, 0))
    return chain_problem(instances.random_chain(rng, args.states), name=f"random-seed-{_pick(args.seed, 0)}")


def _load(args) -> ProblemFile:
    if getattr(args, "problem", None) is None:
        if args.command in ("oracle-check", "mc"):
            return _seeded_chain(args)
        raise UsageError(f"{args.command} needs a problem file")
    return parse_problem(args.problem)


def _policy_or_default(model, policy):
    if policy is None:
        return (0,) * model.n
    return check_policy(model, policy)


# -- subcommands -------------------------------------------------------------

def cmd_validate(args, problem):
    m = problem.model
    return {"valid": True, "kind": problem.kind, "name": problem.name, "n": m.n,
            "controls_per_state": list(m.num_controls), "num_policies": m.num_policies}


def cmd_classify(args, problem):
    model = problem.model
    cap = _pick(args.cap, 100_000)
    if args.policy is not None:
        return {"policy": check_policy(model, args.policy),
                "classification": classify.classify_policy(model, args.policy)}
    if model.num_policies > cap:
        raise UsageError(f"{model.num_policies} policies exceed --cap {cap}; pass --policy")
    return {"policies": [{"policy": mu, "classification": classify.classify_policy(model, mu)}
                         for mu in policy_space(model)]}


def cmd_find_contractive(args, problem):
    mu = classify.find_contractive_policy(problem.model, _pick(args.cap, 100_000))
    return {"policy": mu, "classification": classify.classify_policy(problem.model, mu)}


def cmd_audit_infinite_cost(args, problem):
    return classify.check_infinite_cost_condition(
        problem.model, _pick(args.cap, 100_000), horizon=_pick(args.horizon, 2**40))


def cmd_evaluate(args, problem):
    model = problem.model
    mu = _policy_or_default(model, args.policy)
    c = classify.classify_policy(model, mu)
    if c.contractive:
        return {"policy": mu, "classification": c, "method": "linear-solve",
                "J": policy_eval.evaluate_contractive(model, mu)}
    est = policy_eval.estimate_limsup_cost(model, mu, burn=args.burn, window=args.window)
    return {"policy": mu, "classification": c, "method": "limsup-estimate", "estimate": est}


def _solve_report(rep: solvers.SolveReport, with_trace: bool):
    out = {"J": rep.J, "policy": rep.policy, "iterations": rep.iterations,
           "residual": rep.residual, "status": rep.status, "regime": rep.regime}
    if with_trace:
        out["trace"] = [{"delta": d, "J": J} if isinstance(d, float) else {"policy": d, "J": J}
                        for d, J in rep.trace]
    return out


def cmd_vi(args, problem):
    rep = solvers.value_iterate(problem.model, args.j0, tol=_pick(args.tol, 1e-10),
                                max_iter=_pick(args.max_iters, 10**6))
    return _solve_report(rep, False)


def cmd_pi(args, problem):
    model = problem.model
    mu0 = args.policy if args.policy is not None else classify.find_contractive_policy(model)
    return _solve_report(solvers.policy_iterate(model, mu0), True)


def cmd_perturb(args, problem):
    rep = solvers.solve_perturbed(problem.model, args.delta, tol=_pick(args.tol, 1e-10),
                                  max_iter=_pick(args.max_iters, 10**6))
    return _solve_report(rep, False)


def cmd_hat_j(args, problem):
    model = problem.model
    if args.method == "lp":
        J = lp.solve_hat_j_lp(model)
        TJ, mu = apply_bellman_map(model, J)
        return {"method": "lp", "J": J, "policy": mu, "residual": float(np.max(np.abs(J - TJ)))}
    schedule = solvers.PerturbationSchedule(steps=args.steps, inner_tol=_pick(args.tol, 1e-10))
    rep = solvers.solve_hat_j_perturbation(model, schedule, max_iter=_pick(args.max_iters, 10**6))
    out = _solve_report(rep, args.trace)
    out["method"] = "perturb"
    return out


def cmd_lp(args, problem):
    prog = lp.build_lp(problem.model, args.weights)
    J, status = lp.simplex_solve(prog, tol=_pick(args.tol, 1e-9))
    out = {"status": status, "J": J, "num_vars": prog.num_vars, "num_constraints": len(prog.rows)}
    if args.listing is not None:
        Path(args.listing).write_text(lp.format_lp(prog) + "\n", encoding="utf-8")
        out["listing"] = str(args.listing)
    return out


def cmd_oracle_check(args, problem):
    chain = _need_chain(problem, "oracle-check")
    model = problem.model
    rng = np.random.default_rng(_pick(args.seed, 0))
    seq = [instances.random_policy(rng, model) for _ in range(args.horizon)]
    oracle = expssp.enumerate_cost(chain, seq, args.horizon)
    composed = policy_eval.finite_horizon_compose(model, seq, model.jbar)
    dev = float(np.max(np.abs(oracle - composed)))
    tol = _pick(args.tol, 1e-10)
    return {"horizon": args.horizon, "policy_sequence": seq, "oracle": oracle, "composed": composed,
            "max_abs_deviation": dev, "tol": tol, "pass": dev <= tol}


def cmd_mc(args, problem):
    chain = _need_chain(problem, "mc")
    mu = _policy_or_default(problem.model, args.policy)
    mean, stderr = expssp.mc_cost(chain, mu, args.horizon, args.samples, _pick(args.seed, 0))
    out = {"policy": mu, "horizon": args.horizon, "samples": args.samples, "mean": mean, "stderr": stderr}
    if args.compare:
        exact = expssp.enumerate_cost(chain, mu, args.horizon)
        out["enumerated"] = exact
        out["z"] = np.abs(mean - exact) / np.maximum(stderr, np.finfo(float).tiny)
    return out


def cmd_exit_or_stay(args, problem):
    chain = expssp.exit_or_stay_chain(args.grid_step)
    fixture = chain_problem(chain, name="exit-or-stay",
                            description=f"single state, exit probability u on a grid of step {args.grid_step!r}")
    return _write_fixture(args, fixture)


def cmd_twin_cycles(args, problem):
    fixture = chain_problem(expssp.twin_cycle_chain(args.c), name="twin-cycles",
                            description=f"two zero-length three-cycles with exit cost {args.c!r}")
    return _write_fixture(args, fixture)


def _write_fixture(args, fixture: ProblemFile):
    if args.write is not None:
        write_problem(fixture, args.write)
    return {"written": None if args.write is None else str(args.write), "kind": fixture.kind,
            "n": fixture.n, "controls_per_state": list(fixture.model.num_controls)}


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="convergence or comparison tolerance")
    common.add_argument("--max-iters", type=int, help="iteration limit")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--output", type=Path, help="write the report here instead of stdout")

    parser = argparse.ArgumentParser(prog="affinedp", description="Affine monotonic dynamic programming tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help, problem="required", aliases=()):
        p = sub.add_parser(name, parents=[common], help=help, aliases=list(aliases))
        if problem == "required":
            p.add_argument("problem", type=Path)
        elif problem == "optional":
            p.add_argument("problem", type=Path, nargs="?")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check a problem file")
    p = add("classify", cmd_classify, "spectral classification of policies")
    p.add_argument("--policy", type=_ints)
    p.add_argument("--cap", type=int)
    add("find-contractive", cmd_find_contractive, "find a contractive policy").add_argument("--cap", type=int)
    p = add("check-a31", cmd_audit_infinite_cost, "audit the infinite cost condition",
            aliases=["audit-infinite-cost"])
    p.add_argument("--cap", type=int)
    p.add_argument("--horizon", type=int)
    p = add("evaluate", cmd_evaluate, "cost of a stationary policy")
    p.add_argument("--policy", type=_ints)
    p.add_argument("--burn", type=int, default=1000)
    p.add_argument("--window", type=int, default=120)
    p = add("vi", cmd_vi, "value iteration")
    p.add_argument("--j0", type=_floats)
    add("pi", cmd_pi, "policy iteration").add_argument("--policy", type=_ints)
    add("perturb", cmd_perturb, "solve the delta-perturbed problem").add_argument(
        "--delta", type=float, required=True)
    p = add("hat-j", cmd_hat_j, "optimal cost over contractive policies")
    p.add_argument("--method", choices=("lp", "perturb"), default="lp")
    p.add_argument("--steps", type=int, default=40)
    p.add_argument("--trace", action="store_true")
    p = add("lp", cmd_lp, "solve the linear program")
    p.add_argument("--weights", type=_floats)
    p.add_argument("--listing", type=Path, help="write a plain-text listing of the program")
    p = add("oracle-check", cmd_oracle_check, "compare operator composition with trajectory enumeration",
            problem="optional")
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--states", type=int, default=3)
    p = add("mc", cmd_mc, "Monte Carlo estimate of a policy's finite-horizon cost", problem="optional")
    p.add_argument("--policy", type=_ints)
    p.add_argument("--horizon", type=int, default=6)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--states", type=int, default=3)
    p.add_argument("--compare", action="store_true", help="also enumerate and report z-scores")
    p = add("example-4-1", cmd_exit_or_stay, "write the exit-or-stay grid fixture", problem="none",
            aliases=["exit-or-stay"])
    p.add_argument("--grid-step", type=float, default=1e-3)
    p.add_argument("--write", type=Path)
    p = add("example-4-2", cmd_twin_cycles, "write the twin-cycle fixture", problem="none",
            aliases=["twin-cycles"])
    p.add_argument("--c", type=float, default=3.0)
    p.add_argument("--write", type=Path)
    return parser


def _params(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v)
            for k, v in vars(args).items() if k not in ("func", "command")}


def _emit(doc: dict, output: Path | None, stream) -> None:
    text = json.dumps(jsonable(doc), indent=1)
    if output is None:
        print(text, file=stream)
    else:
        output.write_text(text + "\n", encoding="utf-8")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        problem = None if args.func in (cmd_exit_or_stay, cmd_twin_cycles) else _load(args)
        result = args.func(args, problem)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (AffineDPError, ValueError, OSError) as exc:
        _emit({"command": args.command, "error": type(exc).__name__, "message": str(exc)}, None, sys.stderr)
        return 1
    report = {"command": args.command, "params": _params(args), "result": result,
              "wall_clock_seconds": time.perf_counter() - start}
    _emit(report, args.output, sys.stdout)
    # a failed comparison is still reported in full, but signals failure
    if isinstance(result, dict) and result.get("pass") is False:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
