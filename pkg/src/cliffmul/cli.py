"""Command-line entry point: ``cliffmul {mul,verify,bench,selftest}``.

Exit codes: 0 success, 1 computation or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import random
import sys
from fractions import Fraction
from typing import Callable, Optional, Sequence

from . import __version__
from ._taskrun import hardware_threads
from .bench import GateFailure, emit_table, run_bench
from .blades import (ParseError, Signature, blade_product, blade_to_name,
                     oracle_blade_product)
from .engines import ENGINE_NAMES, EngineConfig, multiply, parallel_sum
from .multivector import Kind, Multivector, format_coeff, parse, to_text

log = logging.getLogger("cliffmul")

THREADS_ENV = "CLIFFMUL_THREADS"
SELFTEST_N = 10 ** 7
SELFTEST_SUM = 50000005000000


class UsageError(Exception):
    pass


def _threads_arg(text: str):
    if text == "auto":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer or 'auto', got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("thread count must be >= 1")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return v


def _signature(text: str) -> Signature:
    try:
        return Signature.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_dims(text: str) -> list[int]:
    """``"2..7"``, ``"9..9"`` or ``"2,3,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            dims = list(range(int(lo), int(hi) + 1))
        else:
            dims = [int(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension range {text!r}") from None
    if not dims or min(dims) < 0:
        raise argparse.ArgumentTypeError(f"bad dimension range {text!r}")
    return dims


def _engines(text: str) -> list[str]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    for name in names:
        if name not in ENGINE_NAMES:
            raise argparse.ArgumentTypeError(f"unknown engine {name!r}; choose from {', '.join(ENGINE_NAMES)}")
    if not names:
        raise argparse.ArgumentTypeError("no engines given")
    return names


def _add_global_flags(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--sig", type=_signature, default=d(Signature(3, 0)), help="signature p,q (default 3,0)")
    p.add_argument("--engine", choices=ENGINE_NAMES, default=d("walsh-seq"))
    p.add_argument("--packsize", type=_positive, default=d(16))
    p.add_argument("--dynamic-packsize", action="store_true", default=d(False))
    p.add_argument("--split", choices=("packsize", "midpoint"), default=d("packsize"))
    p.add_argument("--threads", type=_threads_arg, default=d(None),
                   help=f"worker threads or 'auto' (falls back to ${THREADS_ENV}, then auto)")
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--format", choices=("csv", "md", "text"), default=d("text"))
    p.add_argument("--coeffs", choices=("rational", "float"), default=d("rational"),
                   help="coefficient ring for mul (default rational)")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cliffmul", description="Clifford algebra products in Cl(p,q).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)

    mul = sub.add_parser("mul", parents=[common], help="product of two Clifford polynomials")
    mul.add_argument("x")
    mul.add_argument("y")

    ver = sub.add_parser("verify", parents=[common], help="oracle equivalence and engine cross-checks")
    ver.add_argument("--max-dim", type=_nonneg, default=6)
    ver.add_argument("--samples", type=_nonneg, default=20, help="random engine cross-checks per signature")
    ver.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    ben = sub.add_parser("bench", parents=[common], help="time engines on most general polynomials")
    ben.add_argument("--dims", type=parse_dims, default=parse_dims("2..7"))
    ben.add_argument("--engines", type=_engines, default=["walsh-seq", "walsh-par-tasks"])
    ben.add_argument("--trials", type=_positive, default=5)
    ben.add_argument("--q", type=_nonneg, default=0, help="generators squaring to -1 (default 0)")
    ben.add_argument("--ones", action="store_true", help="all coefficients 1 instead of seeded values")
    ben.add_argument("--cap", type=_nonneg, default=20, help="largest dimension accepted")

    st = sub.add_parser("selftest", parents=[common], help="parallel summation smoke test")
    st.add_argument("--n", type=_positive, default=SELFTEST_N)
    return parser


def resolve_threads(flag) -> int:
    """Thread count fixed once at startup: flag, then environment, then hardware."""
    value = flag
    if value is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                value = _threads_arg(env.strip())
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"${THREADS_ENV}: {exc}") from None
    if value is None or value == "auto":
        return hardware_threads()
    return value


def _config(args, threads: int) -> EngineConfig:
    return EngineConfig(engine=args.engine, packsize=args.packsize, threads=threads,
                        dynamic_packsize=args.dynamic_packsize, split=args.split)


def cmd_mul(args, cfg: EngineConfig, out) -> int:
    kind = Kind(args.coeffs)
    x = parse(args.x, args.sig, kind)
    y = parse(args.y, args.sig, kind)
    z = multiply(x, y, cfg)
    if args.format == "text":
        print(to_text(z), file=out)
    elif args.format == "csv":
        print("coeff,monomial", file=out)
        for c, b in z.term_list():
            print(f"{format_coeff(c)},{blade_to_name(b)}", file=out)
    else:
        print("| coeff | monomial |\n|---:|:---|", file=out)
        for c, b in z.term_list():
            print(f"| {format_coeff(c)} | {blade_to_name(b)} |", file=out)
    return 0


def _signatures(max_dim: int):
    for n in range(max_dim + 1):
        for p in range(n, -1, -1):
            yield Signature(p, n - p)


def _faulty_product(a: int, b: int, sig: Signature):
    s, blade = blade_product(a, b, sig)
    if a == sig.full_mask and b == sig.full_mask and sig.n >= 2:
        s = -s
    return s, blade


def _random_multivector(rng: random.Random, sig: Signature, max_terms: int = 10) -> Multivector:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        terms[rng.randrange(1 << sig.n)] = Fraction(rng.choice((-1, 1)) * rng.randint(1, 20), rng.randint(1, 6))
    return Multivector(sig, terms, Kind.RATIONAL)


def cmd_verify(args, cfg: EngineConfig, out,
               product: Optional[Callable[[int, int, Signature], tuple[int, int]]] = None) -> int:
    if args.max_dim > 12:
        raise UsageError("--max-dim is capped at 12")
    if product is None:
        product = _faulty_product if args.inject_fault else blade_product
    pairs = 0
    for sig in _signatures(args.max_dim):
        size = 1 << sig.n
        for a in range(size):
            for b in range(size):
                got = product(a, b, sig)
                want = oracle_blade_product(a, b, sig)
                if got != want:
                    print(f"FAIL blade product a={blade_to_name(a)} b={blade_to_name(b)} sig={sig.p},{sig.q} "
                          f"expected={want[0]:+d}*{blade_to_name(want[1])} got={got[0]:+d}*{blade_to_name(got[1])}",
                          file=sys.stderr)
                    print(f"blade pairs verified before failure: {pairs}", file=out)
                    return 1
                pairs += 1
    print(f"all {pairs} blade pairs verified", file=out)

    rng = random.Random(f"cliffmul-verify:{args.seed}")
    threads = cfg.thread_count
    configs = [EngineConfig(e, packsize=ps, threads=threads) for e in ENGINE_NAMES
               for ps in ((1, 4, 16) if e == "walsh-par-tasks" else (cfg.packsize,))]
    checks = failures = 0
    for sig in _signatures(args.max_dim):
        for _ in range(args.samples):
            x = _random_multivector(rng, sig)
            y = _random_multivector(rng, sig)
            ref = multiply(x, y, EngineConfig("oracle"))
            for c in configs:
                got = multiply(x, y, c)
                checks += 1
                if got != ref:
                    failures += 1
                    if failures == 1:
                        print(f"FAIL engine {c.engine} packsize={c.packsize} sig={sig.p},{sig.q}\n"
                              f"  x = {to_text(x)}\n  y = {to_text(y)}\n"
                              f"  expected {to_text(ref)}\n  got      {to_text(got)}", file=sys.stderr)
    print(f"engine cross-checks: {checks - failures} passed, {failures} failed", file=out)
    return 1 if failures else 0


def cmd_bench(args, cfg: EngineConfig, out) -> int:
    seed = None if args.ones else args.seed
    records = run_bench(args.dims, args.engines, cfg, trials=args.trials, seed=seed, q=args.q, cap=args.cap)
    fmt = "csv" if args.format == "csv" else "md"
    out.write(emit_table(records, fmt, engines=args.engines, dims=args.dims))
    return 0


def cmd_selftest(args, threads: int, out) -> int:
    n = args.n
    expected = n * (n + 1) // 2
    ok = True
    sequential = sum(range(1, n + 1))
    for mode in ("tasks", "flat"):
        got = parallel_sum(1, n, threads=threads, mode=mode)
        good = got == expected == sequential
        ok &= good
        print(f"sum 1..{n} ({mode}, threads={threads}) = {got} {'ok' if good else 'MISMATCH'}", file=out)
    if n == SELFTEST_N and expected != SELFTEST_SUM:
        ok = False
    try:
        import psutil
        physical = psutil.cpu_count(logical=False)
    except Exception:  # platform without the information
        physical = None
    logical = os.cpu_count()
    print(f"hardware threads: logical={logical} physical={physical if physical else 'unknown'} "
          f"available={hardware_threads()} using={threads}", file=out)
    return 0 if ok else 1


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        threads = resolve_threads(args.threads)
        cfg = _config(args, threads)
        if args.command == "mul":
            return cmd_mul(args, cfg, out)
        if args.command == "verify":
            return cmd_verify(args, cfg, out)
        if args.command == "bench":
            return cmd_bench(args, cfg, out)
        return cmd_selftest(args, threads, out)
    except (UsageError, ParseError) as exc:
        print(f"cliffmul: error: {exc}", file=sys.stderr)
        return 2
    except GateFailure as exc:
        print(f"cliffmul: correctness gate failed: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OverflowError) as exc:
        print(f"cliffmul: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
