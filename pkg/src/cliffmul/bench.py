"""Benchmark harness: most general Clifford polynomials, timed per engine.

Inputs for a dimension are drawn once and shared by every engine, so engines
race on identical data.  Before any timing, each engine's output on the
rational version of the inputs must equal the ``walsh-seq`` output exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import random
import statistics
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .blades import Signature, blade_to_name, canonical_key
from .engines import ENGINE_NAMES, EngineConfig, multiply
from .multivector import Kind, Multivector, format_coeff, to_lines

log = logging.getLogger(__name__)

DEFAULT_DIM_CAP = 20

CSV_HEADER = ("dim", "engine", "terms_x", "terms_y", "blade_products", "wall_seconds",
              "cpu_seconds", "effective_cores", "packsize", "threads", "trials", "seed")


class GateFailure(RuntimeError):
    pass


@dataclass
class BenchRecord:
    dim: int
    signature: tuple[int, int]
    engine: str
    terms_x: int
    terms_y: int
    blade_products: int
    wall_seconds: float
    cpu_seconds: float
    effective_cores: float
    trials: int
    packsize: int
    threads: int
    seed: Optional[int] = None
    wall_only: bool = False
    flags: list[str] = field(default_factory=list)

    def csv_row(self) -> list[str]:
        return [str(self.dim), self.engine, str(self.terms_x), str(self.terms_y),
                str(self.blade_products), f"{self.wall_seconds:.9f}", f"{self.cpu_seconds:.9f}",
                f"{self.effective_cores:.4f}", str(self.packsize), str(self.threads),
                str(self.trials), "" if self.seed is None else str(self.seed)]


def general_polynomial(sig: Signature, coeff_source: Union[None, int, random.Random] = 1,
                       kind: Kind | str = Kind.FLOAT, cap: int = DEFAULT_DIM_CAP) -> Multivector:
    """Multivector with every one of the 2**n basis monomials present.

    ``coeff_source`` is the constant 1 (``1`` or ``None``) or a
    ``random.Random`` (Mersenne Twister).  Seeded coefficients are k/16 with
    k uniform in +-[1, 64], drawn in canonical blade order; they are exact in
    binary floating point, so float and rational runs see identical values.
    """
    if sig.n > cap:
        raise ValueError(f"refusing to build a general polynomial in dimension {sig.n} (cap {cap})")
    blades = sorted(range(1 << sig.n), key=canonical_key)
    if coeff_source is None or coeff_source == 1:
        coeffs = [1] * len(blades)
    elif isinstance(coeff_source, random.Random):
        coeffs = [Fraction(coeff_source.randint(1, 64) * coeff_source.choice((-1, 1)), 16) for _ in blades]
    else:
        raise TypeError("coeff_source must be 1 or a random.Random")
    return Multivector(sig, zip(blades, coeffs), Kind.RATIONAL).to_kind(kind)


def bench_inputs(sig: Signature, seed: Optional[int], cap: int = DEFAULT_DIM_CAP):
    """Rational pair (x, y) for a signature; seed None gives all-ones inputs."""
    if seed is None:
        x = general_polynomial(sig, 1, Kind.RATIONAL, cap)
        return x, x
    x = general_polynomial(sig, random.Random(f"cliffmul:{seed}:{sig.p},{sig.q}:x"), Kind.RATIONAL, cap)
    y = general_polynomial(sig, random.Random(f"cliffmul:{seed}:{sig.p},{sig.q}:y"), Kind.RATIONAL, cap)
    return x, y


def digest(x: Multivector) -> str:
    h = hashlib.sha256(f"{x.sig.p},{x.sig.q},{x.kind.value}\n".encode())
    h.update(to_lines(x).encode())
    return h.hexdigest()


def first_difference(expected: Multivector, got: Multivector) -> str:
    for b in sorted(set(expected.terms) | set(got.terms), key=canonical_key):
        e = expected.terms.get(b)
        g = got.terms.get(b)
        if e != g:
            fmt = lambda c: "absent" if c is None else format_coeff(c)
            return f"{blade_to_name(b)}: expected {fmt(e)}, got {fmt(g)}"
    return "no difference"


def _time_once(fn):
    c0 = time.process_time()
    w0 = time.perf_counter()
    fn()
    w1 = time.perf_counter()
    c1 = time.process_time()
    return w1 - w0, c1 - c0


def run_bench(dims: Iterable[int], engines: Sequence[str], cfg: Optional[EngineConfig] = None,
              trials: int = 5, seed: Optional[int] = 0, q: int = 0,
              cap: int = DEFAULT_DIM_CAP) -> list[BenchRecord]:
    """Time each engine on two general polynomials per dimension.

    The signature for dimension n is (n - q', q') with q' = min(q, n).
    Reported wall and CPU times are medians over ``trials`` timed runs that
    follow one untimed warm-up.
    """
    cfg = cfg or EngineConfig()
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for name in engines:
        if name not in ENGINE_NAMES:
            raise ValueError(f"unknown engine {name!r}")
    threads = cfg.thread_count
    records = []
    for n in dims:
        qq = min(q, n)
        sig = Signature(n - qq, qq)
        x, y = bench_inputs(sig, seed, cap)
        fx, fy = x.to_kind(Kind.FLOAT), y.to_kind(Kind.FLOAT)
        reference = multiply(x, y, replace(cfg, engine="walsh-seq"))
        reference_f = reference.to_kind(Kind.FLOAT)
        seq_wall = None
        for name in engines:
            ecfg = replace(cfg, engine=name)
            got = multiply(x, y, ecfg)
            if got != reference:
                raise GateFailure(f"{name} differs from walsh-seq at {sig}: {first_difference(reference, got)}")
            warm = multiply(fx, fy, ecfg)
            # dyadic inputs keep every float partial sum exact
            if warm != reference_f:
                raise GateFailure(f"{name} float run differs from the rational reference at {sig}: "
                                  f"{first_difference(reference_f, warm)}")
            samples = [_time_once(lambda: multiply(fx, fy, ecfg)) for _ in range(trials)]
            wall = max(statistics.median(w for w, _ in samples), 1e-9)
            cpu = statistics.median(c for _, c in samples)
            wall_only = cpu <= 0
            if wall_only:
                cpu = wall
            rec = BenchRecord(dim=n, signature=(sig.p, sig.q), engine=name, terms_x=len(x), terms_y=len(y),
                              blade_products=len(x) * len(y), wall_seconds=wall, cpu_seconds=cpu,
                              effective_cores=cpu / wall, trials=trials,
                              packsize=ecfg.leaf_size(len(x), len(y)), threads=threads, seed=seed,
                              wall_only=wall_only)
            if name == "walsh-seq":
                seq_wall = wall
            records.append(rec)
            log.info("dim %d %s: %.6fs wall, %.2f effective cores", n, name, wall, rec.effective_cores)
        if seq_wall is not None:
            for rec in records:
                if rec.dim == n and rec.engine == "walsh-par-tasks" and threads == 1 \
                        and rec.wall_seconds > 2 * seq_wall:
                    rec.flags.append("overhead")
                    log.warning("dim %d: walsh-par-tasks with one thread took %.1fx the sequential time",
                                n, rec.wall_seconds / seq_wall)
    return records


def _fmt_time(t: float) -> str:
    return f"{t:.6f}"


def _fmt_ratio(t: Optional[float], ref: Optional[float]) -> str:
    if t is None or ref is None:
        return "NA"
    if ref == 0:
        return "inf"
    return f"{t / ref:.2f}"


def emit_table(records: Sequence[BenchRecord], format: str = "csv",
               engines: Optional[Sequence[str]] = None, dims: Optional[Sequence[int]] = None) -> str:
    """Render records as CSV (one row per record) or a markdown table.

    The markdown table has one row per dimension, a time column per engine and,
    after each non-reference engine, its ratio to the first engine.  Missing
    cells read ``NA``.
    """
    if not records:
        raise ValueError("no records to emit")
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(r.csv_row())
        return buf.getvalue()
    if format not in ("md", "markdown"):
        raise ValueError(f"unknown table format {format!r}")
    if engines is None:
        engines = list(dict.fromkeys(r.engine for r in records))
    if dims is None:
        dims = sorted({r.dim for r in records})
    times = {(r.dim, r.engine): r.wall_seconds for r in records}
    ref = engines[0]
    header = ["dim V", f"t({ref}) [sec]"]
    for e in engines[1:]:
        header += [f"t({e}) [sec]", f"t({e})/t({ref})"]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(":---:" for _ in header) + "|"]
    for d in dims:
        t_ref = times.get((d, ref))
        row = [str(d), "NA" if t_ref is None else _fmt_time(t_ref)]
        for e in engines[1:]:
            t = times.get((d, e))
            row += ["NA" if t is None else _fmt_time(t), _fmt_ratio(t, t_ref)]
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
