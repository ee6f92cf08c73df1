"""Command-line interface.

Exit codes: 0 success, 2 argument error, 3 unsupported case, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

import numpy as np

from . import kernels
from .ai_limit import ai_state, extract_symbols, region_check, x_star
from .continuation import (
    ContinuationOptions,
    ResidualSystem,
    continue_branch,
    residual,
)
from .core import StructuralParams, SymbolSequence, UnfoldingParams, from_slope, iterate_map, residual_orbit
from .errors import (
    AIToolkitError,
    DegenerateParamsError,
    NumericalError,
    UnsupportedCaseError,
)
from .persistence import epsilon_N_search, make_case, region_M_check, solve_orbit_contraction
from .presets import (
    CIRCLE_ALPHA,
    CIRCLE_DELTA,
    CIRCLE_PARAMS,
    CIRCLE_SEED,
    CIRCLE_SIGMA,
    PRESETS,
)
from .records import RunRecord, branch_json, fmt, orbit_csv, params_dict
from .sweep import bifurcation_table, compare_with_reference

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3
EXIT_NUMERICAL = 4

AUDIT_TOL = 1e-11


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _add_params(ap: argparse.ArgumentParser, unfolding: bool = True):
    g = ap.add_argument_group("parameters")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--c", type=float)
    g.add_argument("--slope", type=float, help="parallel-lines slope m = -b/(2a)")
    if unfolding:
        g.add_argument("--sigma", type=float)
        g.add_argument("--delta", type=float)


def _add_word(ap: argparse.ArgumentParser, random_ok: bool = True):
    ap.add_argument("--word", help="symbol word over '-' and '+'")
    if random_ok:
        ap.add_argument("--random-period", type=int)
        ap.add_argument("--seed", type=int, default=0, help="64-bit seed for random words")


def _add_emit(ap: argparse.ArgumentParser):
    ap.add_argument("--emit", help="output path ('-' or omitted for stdout)")
    ap.add_argument("--run-record", help="also write a run record (with timestamps) here")


def resolve_params(args) -> tuple[StructuralParams, float, float]:
    preset = PRESETS[args.preset] if getattr(args, "preset", None) else None
    coeffs = [args.a, args.b, args.c]
    given = sum(v is not None for v in coeffs)
    if args.slope is not None:
        if given:
            raise UsageError("--slope cannot be combined with --a/--b/--c")
        p = from_slope(args.slope)
    elif given == 3:
        p = StructuralParams(*coeffs)
    elif given == 2:
        a, b, c = coeffs
        if a is None:
            a = 1.0 - b - c
        elif b is None:
            b = 1.0 - a - c
        else:
            c = 1.0 - a - b
        p = StructuralParams(a, b, c)
    elif given == 1:
        raise UsageError("give at least two of --a, --b, --c (the third follows from a+b+c=1)")
    elif preset is not None:
        p = preset.p
    else:
        raise UsageError("no parameters: use --preset, --slope or --a/--b/--c")
    sigma = getattr(args, "sigma", None)
    delta = getattr(args, "delta", None)
    sigma = sigma if sigma is not None else (preset.sigma if preset else 0.0)
    delta = delta if delta is not None else (preset.delta if preset else 0.0)
    return p, sigma, delta


def resolve_word(args) -> SymbolSequence:
    if args.word is not None:
        try:
            return SymbolSequence(args.word)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    n = getattr(args, "random_period", None)
    if n is not None:
        if n < 1:
            raise UsageError("--random-period must be positive")
        rng = np.random.default_rng(args.seed)
        return SymbolSequence(rng.choice(np.array([-1, 1], dtype=np.int8), size=n))
    raise UsageError("a word is required (--word, or --random-period with --seed)")


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _run_record(args, command, p, sigma, delta, word, outputs, termination, started):
    if not getattr(args, "run_record", None):
        return
    opts = {k: v for k, v in vars(args).items() if k not in ("func", "run_record")}
    rec = RunRecord(command, params_dict(p, sigma, delta), None if word is None else word.to_list(),
                    opts, outputs, termination, started, _now())
    _write(args.run_record, rec.to_json())


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    p, _, _ = resolve_params(args)
    verdict = region_check(p)
    print(f"conic: {p.conic.value}")
    print(f"discriminant: {fmt(p.discriminant)}")
    try:
        print(f"x_star: {fmt(x_star(p))}")
    except DegenerateParamsError as exc:
        print(f"x_star: undefined ({exc})")
    print(f"region: {verdict.which.value}")
    print(f"margin: {fmt(verdict.margin)}")
    return EXIT_OK


def _audit(p, u, xi):
    res = float(np.max(np.abs(residual_orbit(p, u, xi))))
    if res >= AUDIT_TOL:
        raise NumericalError(f"orbit fails the residual audit ({res:.3e})")


def cmd_ai_state(args) -> int:
    started = _now()
    p, sigma, delta = resolve_params(args)
    word = resolve_word(args)
    xi = ai_state(p, word, tol=args.tol, force=args.force)
    _audit(p, UnfoldingParams(sigma, delta, 0.0), xi)
    _write(args.emit, orbit_csv(word, xi))
    _run_record(args, "ai-state", p, sigma, delta, word, [args.emit or "-"], "ok", started)
    return EXIT_OK


def cmd_persist(args) -> int:
    started = _now()
    p, sigma, delta = resolve_params(args)
    word = resolve_word(args)
    u = UnfoldingParams(sigma, delta, args.epsilon)
    pc = make_case(p, u, M=args.M)
    if pc.kind.value != "GeneralT":
        v = region_M_check(pc)
        print(f"# case {pc.kind.value}: gamma={fmt(pc.gamma)} bound={fmt(v.gamma_bound)} "
              f"({v.binding_constraint})", file=sys.stderr)
    xi = solve_orbit_contraction(pc, word, tol=args.tol, override=args.force)
    _audit(p, u, xi)
    _write(args.emit, orbit_csv(word, xi))
    _run_record(args, "persist", p, sigma, delta, word, [args.emit or "-"], "ok", started)
    return EXIT_OK


def cmd_epsilon_n(args) -> int:
    p, sigma, delta = resolve_params(args)
    res = epsilon_N_search(p, sigma, delta, main_text=args.main_text_bound)
    print(f"epsilon_N: {fmt(res.epsilon_n)}")
    print(f"M: {fmt(res.M)}")
    print(f"gamma_bound: {fmt(res.gamma_bound)}")
    print(f"binding: {res.binding_constraint}")
    return EXIT_OK


def _options(args) -> ContinuationOptions:
    opts = ContinuationOptions(eps_max=args.eps_max, ell0=args.ell0, tol=args.tol)
    if getattr(args, "stop_at_fold", False):
        opts.stop_at_first_fold = True
    return opts


def _audit_branch(rec):
    sys_ = rec.system
    for pt in rec.points:
        res = float(np.max(np.abs(residual(sys_, pt.xi, pt.epsilon))))
        if res >= AUDIT_TOL:
            raise NumericalError(f"branch point at eps={pt.epsilon} fails the residual audit ({res:.3e})")


def cmd_continue(args) -> int:
    started = _now()
    p, sigma, delta = resolve_params(args)
    word = resolve_word(args)
    sys_ = ResidualSystem(p, sigma, delta, word.period)
    xi0 = None
    if args.force:
        xi0 = ai_state(p, word, force=True)
    rec = continue_branch(sys_, word, _options(args), xi0=xi0)
    _audit_branch(rec)
    if args.emit not in (None, "-"):
        _write(args.emit, branch_json(rec))
    out = sys.stderr if args.emit == "-" else sys.stdout
    print(f"word: {word}", file=out)
    print(f"points: {len(rec.points)}", file=out)
    print(f"max_epsilon: {fmt(rec.max_epsilon)}", file=out)
    print(f"termination: {rec.termination}", file=out)
    for ev in rec.events:
        partner = "" if ev.partner_word is None else f" partner={ev.partner_word}"
        print(f"event: {ev.kind.value} epsilon={fmt(ev.epsilon)}{partner}", file=out)
    if args.emit == "-":
        sys.stdout.write(branch_json(rec))
    _run_record(args, "continue", p, sigma, delta, word, [args.emit or ""], rec.termination, started)
    return EXIT_OK


def cmd_bif_table(args) -> int:
    started = _now()
    p, sigma, delta = resolve_params(args)
    opts = ContinuationOptions(eps_max=args.eps_max, ell0=args.ell0, tol=args.tol)
    table, _ = bifurcation_table(p, sigma, delta, args.max_period, opts, args.workers)
    lines = ["kind,first,second,epsilon,hamming,identified_by"]
    for e in table.entries:
        lines.append(",".join([
            e.kind, str(e.first), "" if e.second is None else str(e.second),
            fmt(e.epsilon), "" if e.hamming is None else str(e.hamming), e.how,
        ]))
    if args.emit:
        _write(args.emit, "\n".join(lines) + "\n")
    for e in table.entries:
        ham = "" if e.hamming is None else f"  hamming={e.hamming}"
        print(f"{e.kind:2s}  {e.epsilon:9.4f}  {e.label()}{ham}")
    for word, ev in table.unpaired:
        print(f"unpaired fold: {word} at {ev.epsilon:.6f}")
    for word, msg in sorted(table.failures.items()):
        print(f"failed: {word}: {msg}")
    if args.preset and not any(getattr(args, k) is not None for k in ("a", "b", "c", "slope", "sigma", "delta")):
        cmp = compare_with_reference(table, args.preset)
        good = sum(c.ok for c in cmp)
        print(f"reference cells reproduced: {good} of {len(cmp)}")
        for c in cmp:
            if not c.ok:
                got = "missing" if c.computed is None else f"{c.computed:.4f}"
                print(f"  mismatch {c.kind} {c.first}/{c.second}: reference {c.reference:.2f}, computed {got}")
    _run_record(args, "bif-table", p, sigma, delta, None, [args.emit or ""], "ok", started)
    return EXIT_OK


def extract_workflow(p, sigma, delta, alpha, point, return_tol=0.005, max_steps=100_000,
                     run_continuation=True, opts=None, random_words=0, seed=0):
    """Closed-curve workflow: first near-return, symbol word, continuation from eps = 0."""
    point = np.asarray(point, dtype=float)
    k = int(kernels.first_return(p.a, p.b, p.c, sigma, delta, float(alpha), point, float(return_tol), int(max_steps)))
    if k == -2:
        raise NumericalError("the orbit of the seed point diverged")
    if k < 0:
        raise NumericalError(f"no return within {max_steps} iterations")
    traj = iterate_map(p, UnfoldingParams(sigma, delta), alpha, point, k)
    word = extract_symbols(p, traj[:k, 0])
    out = {"return_time": k, "return_distance": float(np.linalg.norm(traj[k] - traj[0])),
           "word": word.to_list()}
    if not run_continuation:
        return out, None
    opts = ContinuationOptions(eps_max=1.0, ell0=0.01 * np.sqrt(k), stop_at_first_fold=True) if opts is None else opts
    sys_ = ResidualSystem(p, sigma, delta, k)

    def start(w):
        # with b = 0 and Q(1, 1) = 1 the word itself lies on the curve
        if p.b == 0.0 and abs(p.a + p.c - 1.0) < 1e-12:
            return w.as_float()
        return ai_state(p, w, force=True)

    rec = continue_branch(sys_, word, opts, xi0=start(word), detect=False)
    out["continuation"] = {"max_epsilon": rec.max_epsilon, "termination": rec.termination,
                           "points": len(rec.points)}
    rng = np.random.default_rng(seed)
    contrast = []
    for _ in range(random_words):
        w = SymbolSequence(rng.choice(np.array([-1, 1], dtype=np.int8), size=k))
        r = continue_branch(sys_, w, opts, xi0=start(w), detect=False)
        contrast.append({"max_epsilon": r.max_epsilon, "termination": r.termination})
    if random_words:
        out["random_words"] = contrast
    return out, rec


def cmd_extract_workflow(args) -> int:
    started = _now()
    if args.preset or args.a is not None or args.b is not None or args.c is not None or args.slope is not None:
        p, sigma, delta = resolve_params(args)
    else:
        p = CIRCLE_PARAMS
        sigma = CIRCLE_SIGMA if args.sigma is None else args.sigma
        delta = CIRCLE_DELTA if args.delta is None else args.delta
    point = list(CIRCLE_SEED if args.point is None else args.point)
    if args.seed_order == "delay":
        point = point[::-1]
    ell0 = args.ell0
    opts = None
    if ell0 is not None or args.eps_max is not None:
        opts = ContinuationOptions(eps_max=args.eps_max if args.eps_max is not None else 1.0,
                                   ell0=ell0 if ell0 is not None else 0.3, stop_at_first_fold=True)
    out, _ = extract_workflow(p, sigma, delta, args.alpha, point, args.return_tol, args.max_steps,
                              not args.no_continue, opts, args.random_words, args.seed)
    _write(args.emit, json.dumps(out, indent=1) + "\n")
    _run_record(args, "extract-workflow", p, sigma, delta, SymbolSequence(out["word"]),
                [args.emit or "-"], out.get("continuation", {}).get("termination", "ok"), started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ai-toolkit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="conic class, x* and contraction region")
    _add_params(sp, unfolding=False)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("ai-state", help="AI state of a word as CSV")
    _add_params(sp)
    _add_word(sp)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--force", action="store_true", help="iterate even outside the contraction regions")
    _add_emit(sp)
    sp.set_defaults(func=cmd_ai_state)

    sp = sub.add_parser("persist", help="orbit at eps > 0 by the contraction operator")
    _add_params(sp)
    _add_word(sp)
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--M", type=float, default=0.5, help="cube size")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--force", action="store_true", help="skip the region certificate")
    _add_emit(sp)
    sp.set_defaults(func=cmd_persist)

    sp = sub.add_parser("epsilon-n", help="largest eps with guaranteed persistence")
    _add_params(sp)
    sp.add_argument("--main-text-bound", action="store_true",
                    help="use the combined mapping inequality instead of the two split bounds")
    sp.set_defaults(func=cmd_epsilon_n)

    sp = sub.add_parser("continue", help="pseudo-arclength continuation of one word")
    _add_params(sp)
    _add_word(sp)
    sp.add_argument("--eps-max", type=float, default=2.0)
    sp.add_argument("--ell0", type=float, default=0.01)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--stop-at-fold", action="store_true")
    sp.add_argument("--force", action="store_true", help="start from a forced AI-state iteration")
    _add_emit(sp)
    sp.set_defaults(func=cmd_continue)

    sp = sub.add_parser("bif-table", help="bifurcations of all words up to a period")
    _add_params(sp)
    sp.add_argument("--max-period", type=int, default=6)
    sp.add_argument("--eps-max", type=float, default=2.0)
    sp.add_argument("--ell0", type=float, default=0.01)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--workers", type=int)
    _add_emit(sp)
    sp.set_defaults(func=cmd_bif_table)

    sp = sub.add_parser("extract-workflow", help="symbol word from a near-return of the map, then continue it")
    _add_params(sp)
    sp.add_argument("--alpha", type=float, default=CIRCLE_ALPHA)
    sp.add_argument("--point", type=float, nargs=3, metavar=("P0", "P1", "P2"))
    sp.add_argument("--seed-order", choices=["delay", "xyz"], default="delay",
                    help="'delay': point is (x_{t-2}, x_{t-1}, x_t); 'xyz': point is (x, y, z)")
    sp.add_argument("--return-tol", type=float, default=0.005)
    sp.add_argument("--max-steps", type=int, default=100_000)
    sp.add_argument("--no-continue", action="store_true")
    sp.add_argument("--eps-max", type=float)
    sp.add_argument("--ell0", type=float)
    sp.add_argument("--random-words", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    _add_emit(sp)
    sp.set_defaults(func=cmd_extract_workflow)
    return ap


def _glue_words(argv):
    # a word such as "-+" would otherwise be taken for an option
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--word" and i + 1 < len(argv) and argv[i + 1] and set(argv[i + 1]) <= {"+", "-"}:
            out.append(f"--word={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_words(sys.argv[1:] if argv is None else list(argv)))
    try:
        return args.func(args)
    except (UsageError, DegenerateParamsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedCaseError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (AIToolkitError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
