"""Command-line front end: gen, fit, sample, verify, enumerate.

Exit codes: 0 success, 1 verification mismatch or other run failure,
2 input/format errors, 3 size-cap violations. Caps and the worker count
can also be set through MCMSELECT_* environment variables (see --help).
All evidence values are stored in the report in natural log; --log-base
only rescales the printed summary.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import counting
from .basis import (
    DEFAULT_EXHAUSTIVE_IM_CAP,
    Basis,
    best_im_exhaustive,
    best_im_heuristic,
    identity_basis,
    load_basis,
    save_basis,
)
from .data import DEFAULT_RANK_CAP, load_dataset, save_dataset
from .errors import CapExceededError, DatasetFormatError
from .evidence import mcm_log_evidence
from .gf2 import MAX_WIDTH
from .partitions import (
    DEFAULT_EXHAUSTIVE_MCM_CAP,
    best_mcm_exhaustive,
    best_mcm_greedy,
)
from .report import (
    build_report,
    factor_graph_dot,
    file_sha256,
    read_report,
    report_basis,
    report_structure,
    sig12,
    verify_report,
    write_report,
)
from .sampling import fit_mcm, generate_synthetic, sample_mcm

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_CAP = 3

ENUMERATE_MAX_N = 50


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise DatasetFormatError(f"environment variable {name}={raw!r} "
                                 "is not an integer") from None


@dataclass
class RunConfig:
    """Resolved settings of one fit run; embedded verbatim in the report."""

    n: int
    data: str
    relabel: str | None
    basis_mode: str
    basis_file: str | None
    product_order: int
    mcm_mode: str
    seed: int
    max_im_n: int
    max_mcm_n: int
    rank_cap: int
    workers: int
    log_base: str


def _add_common_caps(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-im-n", type=int,
                   default=_env_int("MCMSELECT_MAX_IM_N",
                                    DEFAULT_EXHAUSTIVE_IM_CAP),
                   help="cap on n for the exhaustive basis search")
    p.add_argument("--max-mcm-n", type=int,
                   default=_env_int("MCMSELECT_MAX_MCM_N",
                                    DEFAULT_EXHAUSTIVE_MCM_CAP),
                   help="cap on n for the exhaustive partition scan")
    p.add_argument("--rank-cap", type=int,
                   default=_env_int("MCMSELECT_RANK_CAP", DEFAULT_RANK_CAP),
                   help="largest block rank whose 2^r count table is allowed")
    p.add_argument("--workers", type=int,
                   default=_env_int("MCMSELECT_WORKERS", os.cpu_count() or 1),
                   help="worker threads for block-evidence evaluation")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcmselect",
        description="Exact Bayesian selection of minimally complex spin "
                    "models for binary data. Input files hold one "
                    "observation per line as n characters of 0/1, where "
                    "'1' means the spin is -1.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--state", action="append", required=True,
                   metavar="BITS:PROB",
                   help="a state and its probability; repeatable")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="find the best basis and block structure")
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--relabel", default=None,
                   help="side file permuting/flipping input variables")
    p.add_argument("--basis", default="exhaustive",
                   help="exhaustive | heuristic | identity | file:PATH")
    p.add_argument("--order", type=int, default=4,
                   help="product order for the heuristic basis search")
    p.add_argument("--mcm", choices=["exhaustive", "greedy"],
                   default="exhaustive")
    p.add_argument("--seed", type=int, default=0,
                   help="recorded for provenance; the fit is deterministic")
    p.add_argument("--log-base", choices=["e", "2", "10"], default="e",
                   help="base for printed log-evidence (file stays natural)")
    p.add_argument("--out", required=True, help="report file (JSON)")
    p.add_argument("--dot", default=None, help="factor-graph DOT output")
    p.add_argument("--basis-out", default=None, help="basis text output")
    _add_common_caps(p)

    p = sub.add_parser("sample", help="draw configurations from a fitted model")
    p.add_argument("--report", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--data", default=None,
                   help="override the dataset path stored in the report")

    p = sub.add_parser("verify", help="recompute a report's evidence")
    p.add_argument("--report", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("enumerate", help="print model-family counts per n")
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--min-n", type=int, default=0)

    return parser


def _parse_states(specs: list[str], n: int) -> tuple[list[int], list[float]]:
    states: list[int] = []
    probs: list[float] = []
    for spec in specs:
        bits, sep, prob = spec.partition(":")
        if not sep:
            raise DatasetFormatError(f"expected BITS:PROB, got {spec!r}")
        if len(bits) != n:
            raise DatasetFormatError(
                f"state {bits!r} has {len(bits)} bits, expected {n}")
        state = 0
        for i, c in enumerate(bits):
            if c == "1":
                state |= 1 << i
            elif c != "0":
                raise DatasetFormatError(f"invalid character {c!r} in {bits!r}")
        states.append(state)
        probs.append(float(prob))
    return states, probs


def _cmd_gen(args: argparse.Namespace) -> int:
    states, probs = _parse_states(args.state, args.n)
    d = generate_synthetic(states, probs, args.count, args.seed, n=args.n)
    header = [
        f"n={args.n} N={args.count} seed={args.seed}",
        "generator: i.i.d. draws from "
        + ", ".join(f"{s}:{p}" for s, p in zip(args.state, probs)),
    ]
    save_dataset(d.rows, d.n, args.out, header=header)
    print(f"wrote {args.count} observations to {args.out}")
    return EXIT_OK


def _make_basis(d, args) -> tuple[Basis, dict]:
    extras: dict = {}
    mode = args.basis
    if mode == "exhaustive":
        return best_im_exhaustive(d, max_n=args.max_im_n), extras
    if mode == "heuristic":
        basis, rounds = best_im_heuristic(d, args.order)
        extras["heuristic_rounds"] = rounds
        return basis, extras
    if mode == "identity":
        return identity_basis(d), extras
    if mode.startswith("file:"):
        return load_basis(mode[5:], d), extras
    raise DatasetFormatError(f"unknown basis mode {mode!r}")


def _cmd_fit(args: argparse.Namespace) -> int:
    if args.n > MAX_WIDTH:
        raise CapExceededError(f"n={args.n} exceeds the width cap {MAX_WIDTH}")
    t0 = time.monotonic()
    d = load_dataset(args.data, args.n, relabel=args.relabel)
    basis, extras = _make_basis(d, args)
    if args.mcm == "exhaustive":
        structure, evidence = best_mcm_exhaustive(
            d, basis, max_n=args.max_mcm_n, rank_cap=args.rank_cap,
            workers=args.workers)
    else:
        trace = best_mcm_greedy(d, basis, rank_cap=args.rank_cap,
                                workers=args.workers)
        structure = trace.best().structure
        evidence = mcm_log_evidence(d, basis, structure, args.rank_cap)
        extras["merge_curve"] = [
            [a, ev] for a, ev in trace.evidence_curve()
        ]
    config = RunConfig(
        n=args.n, data=str(args.data), relabel=args.relabel,
        basis_mode=args.basis, basis_file=(args.basis[5:]
                                           if args.basis.startswith("file:")
                                           else None),
        product_order=args.order, mcm_mode=args.mcm, seed=args.seed,
        max_im_n=args.max_im_n, max_mcm_n=args.max_mcm_n,
        rank_cap=args.rank_cap, workers=args.workers, log_base=args.log_base,
    )
    input_info = {
        "path": str(args.data),
        "sha256": file_sha256(args.data),
        "n": d.n,
        "N": d.N,
    }
    rec = build_report(asdict(config), input_info, basis, structure, evidence,
                       extras={"extras": extras} if extras else None)
    write_report(rec, args.out)
    if args.dot:
        Path(args.dot).write_text(factor_graph_dot(basis, structure),
                                  encoding="ascii")
    if args.basis_out:
        save_basis(basis, args.basis_out)
    scale = 1.0 if args.log_base == "e" else 1.0 / math.log(float(args.log_base))
    unit = "nats" if args.log_base == "e" else f"log{args.log_base}"
    print(f"N={d.N} n={d.n} blocks={len(structure.blocks)} "
          f"K={evidence.K}")
    print(f"log-evidence ({unit}): "
          f"{sig12(evidence.total_log_evidence * scale)}")
    print(f"max log-likelihood ({unit}): "
          f"{sig12(evidence.max_log_likelihood * scale)}")
    print(f"report: {args.out}  ({time.monotonic() - t0:.2f}s)")
    return EXIT_OK


def _cmd_sample(args: argparse.Namespace) -> int:
    rec = read_report(args.report)
    data_path = args.data or rec["input"]["path"]
    if not Path(data_path).exists():
        raise DatasetFormatError(
            f"source dataset {data_path} not found; pass --data")
    n = rec["input"]["n"]
    d = load_dataset(data_path, n, relabel=rec["config"].get("relabel"))
    basis = report_basis(rec)
    structure = report_structure(rec)
    header = [
        f"sampled count={args.count} seed={args.seed}",
        f"model report: {args.report}",
    ]
    if args.count == 0:
        save_dataset([], n, args.out, header=header)
        print(f"wrote 0 observations to {args.out}")
        return EXIT_OK
    fitted = fit_mcm(d, basis, structure)
    rows = sample_mcm(fitted, args.seed, args.count)
    save_dataset(rows, n, args.out, header=header)
    print(f"wrote {args.count} observations to {args.out}")
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    rec = read_report(args.report)
    data_path = args.data or rec["input"]["path"]
    if not Path(data_path).exists():
        raise DatasetFormatError(
            f"source dataset {data_path} not found; pass --data")
    d = load_dataset(data_path, rec["input"]["n"],
                     relabel=rec["config"].get("relabel"))
    ok, fresh, stored = verify_report(rec, d, tol=args.tol)
    print(f"stored:     {sig12(stored)}")
    print(f"recomputed: {sig12(fresh)}")
    if ok:
        print("verify: OK")
        return EXIT_OK
    print(f"verify: MISMATCH (|diff| = {sig12(abs(fresh - stored))})")
    return EXIT_FAIL


def _cmd_enumerate(args: argparse.Namespace) -> int:
    if args.max_n > ENUMERATE_MAX_N:
        raise CapExceededError(
            f"enumeration cap is n={ENUMERATE_MAX_N}, got {args.max_n}")
    if args.min_n < 0 or args.min_n > args.max_n:
        raise DatasetFormatError("empty n range")
    cols = ["n", "IM", "SCM", "MCM", "MCM*", "Bell", "pairwise"]
    rows = []
    for n in range(args.min_n, args.max_n + 1):
        rows.append([
            str(n),
            str(counting.count_im_all(n)),
            str(counting.count_icc_all(n)),
            str(counting.count_mcm_all(n)),
            str(counting.count_mcm_star(n)),
            str(counting.bell(n)),
            str(counting.pairwise_model_count(n)),
        ])
    widths = [max(len(r[i]) for r in [cols] + rows) for i in range(len(cols))]
    for r in [cols] + rows:
        print("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    return EXIT_OK


_HANDLERS = {
    "gen": _cmd_gen,
    "fit": _cmd_fit,
    "sample": _cmd_sample,
    "verify": _cmd_verify,
    "enumerate": _cmd_enumerate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (DatasetFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
