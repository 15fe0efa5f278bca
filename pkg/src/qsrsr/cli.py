"""Command-line interface: solve | check | capacity | disc | shrunk | oracle.

Exit codes: 0 semi-stable (or no instability found), 10 unstable,
2 input error, 3 randomized search exhausted.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys
from fractions import Fraction

from .blops import build_kraus
from .data import OracleTooLarge, PartitionedDataSet, brute_force_disc_datum, brute_force_discrepancy, to_representation
from .io import InputError, load_any
from .linalg import format_rational
from .quiver import DatumError, QuiverDatum, bipartize, validate
from .recovery import SolverConfig, check_datum, discrepancy, solve_srsr
from .report import dumps, input_summary, render_text, report_to_obj, shrunk_to_obj, subrep_to_obj, tuple_to_obj
from .scaling import ScalingBreakdown, ScalingConfig, capacity_positive
from .wong import NoShrunkSubspace, RetriesExhausted, algorithm_p

EXIT_OK, EXIT_UNSTABLE, EXIT_INPUT, EXIT_EXHAUSTED = 0, 10, 2, 3
DUMP_LIMIT = 10**6


def _epsilon(text: str) -> Fraction:
    try:
        e = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}")
    if not 0 < e < 1:
        raise argparse.ArgumentTypeError("epsilon must lie strictly between 0 and 1")
    return e


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsrsr", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="data set or quiver datum (JSON), or CSV with --blocks; ex1..ex4 name bundled fixtures")
    common.add_argument("--blocks", help="block sizes d1,d2,... for CSV input")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--json", dest="format", action="store_const", const="json")
    common.add_argument("--no-timings", action="store_true", help="omit timing fields from JSON")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed (env QSRSR_SEED overrides)")
    common.add_argument("--epsilon", type=_epsilon, default=Fraction(1, 2))
    common.add_argument("--max-retries", type=int, default=8)
    common.add_argument("--rank-tol", type=float, default=1e-9, help="tolerance for floating cross-checks only")
    common.add_argument("--oracle-max-n", type=int, default=12)
    common.add_argument("--max-iters", type=int, default=None)
    common.add_argument("--ds-threshold", type=float, default=None)
    common.add_argument("--no-exact-precheck", action="store_true")
    common.add_argument("--no-certify", action="store_true", help="run the scaling loop without certified early exit")
    common.add_argument("--no-scaling", action="store_true", help="skip the operator-scaling screen")
    common.add_argument("--dump-kraus", metavar="PATH", help="write the materialized Kraus operators (toy sizes)")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="full SRSR pipeline")
    sub.add_parser("check", parents=[common], help="semi-stability of a quiver datum")
    sub.add_parser("capacity", parents=[common], help="operator scaling verdict")
    sub.add_parser("disc", parents=[common], help="discrepancy via Wong sequences")
    s = sub.add_parser("shrunk", parents=[common], help="shrunk subspace certificate")
    s.add_argument("--no-guard", action="store_true", help="keep retrying when B is invertible")
    sub.add_parser("oracle", parents=[common], help="brute-force discrepancy")
    return p


def _seed(args) -> int:
    env = os.environ.get("QSRSR_SEED")
    if env is not None:
        return int(env)
    return args.seed if args.seed is not None else secrets.randbits(64)


def _configs(args, seed: int) -> tuple[SolverConfig, ScalingConfig]:
    sc = ScalingConfig(max_iters=args.max_iters, ds_threshold=args.ds_threshold,
                       exact_precheck=not args.no_exact_precheck, certify=not args.no_certify)
    cfg = SolverConfig(epsilon=args.epsilon, seed=seed, max_retries=args.max_retries, scaling=not args.no_scaling,
                       scaling_config=sc, oracle_max_n=args.oracle_max_n)
    return cfg, sc


def _config_obj(cfg: SolverConfig, args) -> dict:
    out = cfg.to_dict()
    out.update({"rank_tol": args.rank_tol, "format": args.format})
    return out


def _as_datum(obj) -> QuiverDatum:
    return to_representation(obj) if isinstance(obj, PartitionedDataSet) else obj


def _dump_kraus(K, path: str) -> None:
    if K.L * K.N * K.N > DUMP_LIMIT:
        raise InputError(f"refusing to materialize {K.L} operators of size {K.N}x{K.N}")
    ops = [{"index": [i + 1, j + 1, K.arrows[k].id, q + 1, r + 1],
            "matrix": [[format_rational(x) for x in row] for row in K.materialize((i, j, k, q, r)).rows]}
           for i, j, k, q, r in K.indices()]
    with open(path, "w") as fh:
        json.dump({"N": K.N, "L": K.L, "operators": ops}, fh, indent=1)


def _emit(args, obj: dict, text: str) -> None:
    if args.format == "json":
        if args.no_timings:
            obj.pop("timings", None)
        sys.stdout.write(dumps(obj))
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        seed = _seed(args)
    except ValueError:
        print("error: QSRSR_SEED is not an integer", file=sys.stderr)
        return EXIT_INPUT
    if seed < 0:
        print("error: seed must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    cfg, sc = _configs(args, seed)
    try:
        obj, fixture = load_any(args.input, args.blocks)
        if isinstance(obj, QuiverDatum):
            problems = validate(obj)
            if problems:
                raise InputError("; ".join(map(str, problems)))
        inp = input_summary(obj, args.input, fixture)
        handler = COMMANDS[args.command]
        return handler(args, obj, cfg, sc, inp)
    except (InputError, DatumError, OracleTooLarge, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def cmd_solve(args, obj, cfg, sc, inp) -> int:
    if not isinstance(obj, PartitionedDataSet):
        raise InputError("solve expects a partitioned data set; use 'check' for quiver data")
    if args.dump_kraus:
        _dump_kraus(build_kraus(to_representation(obj)), args.dump_kraus)
    r = solve_srsr(obj, cfg)
    r.config = _config_obj(cfg, args)
    _emit(args, report_to_obj(r, "solve", inp, not args.no_timings), render_text(r))
    return EXIT_UNSTABLE if r.unstable else EXIT_OK


def cmd_check(args, obj, cfg, sc, inp) -> int:
    datum = _as_datum(obj)
    if args.dump_kraus:
        _dump_kraus(_bipartite_kraus(datum)[0], args.dump_kraus)
    r = check_datum(datum, cfg)
    r.config = _config_obj(cfg, args)
    _emit(args, report_to_obj(r, "check", inp, not args.no_timings), render_text(r))
    return EXIT_UNSTABLE if r.unstable else EXIT_OK


def _bipartite_kraus(datum: QuiverDatum):
    try:
        return build_kraus(datum), datum
    except DatumError:
        work = bipartize(datum).datum
        return build_kraus(work), work


def cmd_capacity(args, obj, cfg, sc, inp) -> int:
    K, _ = _bipartite_kraus(_as_datum(obj))
    if args.dump_kraus:
        _dump_kraus(K, args.dump_kraus)
    anomalies = []
    try:
        tr = capacity_positive(K, sc)
    except ScalingBreakdown as exc:
        tr = exc.trace
        anomalies.append(str(exc))
    out = {"schema": "qsrsr/1", "command": "capacity", "input": inp, **tr.to_dict(),
           "anomalies": anomalies, "config": _config_obj(cfg, args)}
    text = (f"verdict: {tr.verdict}\nreason: {tr.reason}\niterations: {tr.iterations}\n"
            f"ds threshold: {tr.threshold:.6e}\nbudget: {tr.budget} (log base {tr.log_base})\n"
            + (f"final ds: {tr.ds_values[-1]:.6e}\n" if tr.ds_values else "")
            + (f"certificate: pairing {tr.certificate['pairing']}\n" if tr.certificate else "")
            + "".join(f"ANOMALY: {a}\n" for a in anomalies))
    _emit(args, out, text)
    if anomalies:
        return EXIT_EXHAUSTED
    return EXIT_OK if tr.positive else EXIT_UNSTABLE


def cmd_disc(args, obj, cfg, sc, inp) -> int:
    K, work = _bipartite_kraus(_as_datum(obj))
    if args.dump_kraus:
        _dump_kraus(K, args.dump_kraus)
    try:
        d = discrepancy(work, cfg.epsilon, cfg.seed, cfg.max_retries, K)
    except RetriesExhausted as exc:
        out = {"schema": "qsrsr/1", "command": "disc", "input": inp, "error": str(exc),
               "lower_bound": exc.lower_bound, "config": _config_obj(cfg, args)}
        _emit(args, out, f"error: {exc} (lower bound {exc.lower_bound})\n")
        return EXIT_EXHAUSTED
    out = {"schema": "qsrsr/1", "command": "disc", "input": inp, "value": d.value, "exact": d.exact}
    if d.upper is not None and not d.exact:
        out["upper_bound"] = d.upper
    out["subrepresentation"] = subrep_to_obj(d.subrep, work.quiver.vertices)
    if d.combination is not None:
        out["certificate"] = {"seed": d.combination.seed, "retry": d.combination.retry, "s": d.combination.s,
                              "alpha": list(d.combination.alpha)}
    out["config"] = _config_obj(cfg, args)
    _emit(args, out, f"disc: {d.value} ({'exact' if d.exact else 'lower bound'})\n")
    return EXIT_UNSTABLE if d.value > 0 else EXIT_OK


def cmd_shrunk(args, obj, cfg, sc, inp) -> int:
    K, _ = _bipartite_kraus(_as_datum(obj))
    if args.dump_kraus:
        _dump_kraus(K, args.dump_kraus)
    base = {"schema": "qsrsr/1", "command": "shrunk", "input": inp}
    try:
        cert = algorithm_p(K, cfg.epsilon, cfg.seed, cfg.max_retries, guard=not args.no_guard)
    except NoShrunkSubspace as exc:
        B = exc.combo
        out = {**base, "status": "NoShrunkSubspace", "seed": B.seed, "retry": B.retry, "s": B.s,
               "alpha": list(B.alpha), "config": _config_obj(cfg, args)}
        _emit(args, out, f"no shrunk subspace: B (retry {B.retry}) is invertible\n")
        return EXIT_OK
    except RetriesExhausted as exc:
        out = {**base, "status": "RetriesExhausted", "attempts": [shrunk_to_obj(a) for a in exc.attempts],
               "config": _config_obj(cfg, args)}
        _emit(args, out, f"{exc}\n")
        return EXIT_EXHAUSTED
    out = {**base, **shrunk_to_obj(cert), "config": _config_obj(cfg, args)}
    _emit(args, out, f"c = {cert.c}: dim U = {cert.U.dim}, dim A(U) = {cert.image_dim}, corank(B) = {cert.corank_B}\n"
                     f"seed {cert.B.seed} retry {cert.B.retry}\n")
    return EXIT_UNSTABLE


def cmd_oracle(args, obj, cfg, sc, inp) -> int:
    base = {"schema": "qsrsr/1", "command": "oracle", "input": inp}
    if isinstance(obj, PartitionedDataSet):
        o = brute_force_discrepancy(obj, args.oracle_max_n)
        out = {**base, "disc": o.disc, "index_set": [i + 1 for i in o.index_set],
               "subspaces": tuple_to_obj(o.tuple), "config": _config_obj(cfg, args)}
        text = f"disc: {o.disc}\nindex set: {' '.join(str(i + 1) for i in o.index_set)}\n" + "".join(
            f"T_{j + 1} (dim {s.dim})\n" for j, s in enumerate(o.tuple.spaces))
        value = o.disc
    else:
        try:
            value, W = brute_force_disc_datum(obj, args.oracle_max_n)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        out = {**base, "disc": value, "subrepresentation": subrep_to_obj(W, obj.quiver.vertices),
               "config": _config_obj(cfg, args)}
        text = f"disc: {value}\n"
    _emit(args, out, text)
    return EXIT_UNSTABLE if value > 0 else EXIT_OK


COMMANDS = {"solve": cmd_solve, "check": cmd_check, "capacity": cmd_capacity, "disc": cmd_disc,
            "shrunk": cmd_shrunk, "oracle": cmd_oracle}


if __name__ == "__main__":
    sys.exit(main())
