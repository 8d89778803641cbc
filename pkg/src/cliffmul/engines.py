"""Clifford-polynomial product engines.

``walsh-seq``        double loop over both term lists, Walsh-function signs
``walsh-par-tasks``  recursive split of the larger term list at ``packsize``,
                     children combined by addition (task/continuation style)
``walsh-par-flat``   one thread per contiguous row block of x, summed in order
``chevalley``        blade-times-multivector recursion over single generators
``oracle``           naive double loop over :func:`oracle_blade_product`
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from ._taskrun import TaskStats, even_blocks, hardware_threads, run_flat, run_tree
from .blades import Signature, generators, inverse_gray, oracle_blade_product
from .multivector import Kind, Multivector, check_compatible

ENGINE_NAMES = ("walsh-seq", "walsh-par-tasks", "walsh-par-flat", "chevalley", "oracle")

# dense accumulators hold 2**n slots per partial result
DENSE_MAX_DIM = 16
_INT64_LIMIT = 2 ** 62


@dataclass(frozen=True)
class EngineConfig:
    engine: str = "walsh-seq"
    packsize: int = 16
    threads: Union[int, str] = "auto"
    dynamic_packsize: bool = False
    split: str = "packsize"

    def __post_init__(self):
        if self.engine not in ENGINE_NAMES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {', '.join(ENGINE_NAMES)}")
        if not isinstance(self.packsize, int) or isinstance(self.packsize, bool) or self.packsize < 1:
            raise ValueError(f"packsize must be a positive integer, got {self.packsize!r}")
        if self.threads != "auto" and (not isinstance(self.threads, int) or isinstance(self.threads, bool)
                                       or self.threads < 1):
            raise ValueError(f"threads must be a positive integer or 'auto', got {self.threads!r}")
        if self.split not in ("packsize", "midpoint"):
            raise ValueError(f"split must be 'packsize' or 'midpoint', got {self.split!r}")

    @property
    def thread_count(self) -> int:
        return hardware_threads() if self.threads == "auto" else self.threads

    def leaf_size(self, m: int, k: int) -> int:
        if not self.dynamic_packsize:
            return self.packsize
        return max(4, math.ceil(max(m, k) / (4 * self.thread_count)))


class _Operands:
    """Term lists of x and y in a form the leaf computation can slice.

    Rational inputs are rescaled to integer numerators over a common
    denominator; results are divided by ``denom`` at the end.
    """

    def __init__(self, x: Multivector, y: Multivector):
        check_compatible(x, y)
        self.sig = x.sig
        self.kind = x.kind
        n = x.sig.n
        self.qmask = x.sig.qmask
        xb = list(x.terms)
        yb = list(y.terms)
        yg = [inverse_gray(b, n) for b in yb]
        if self.kind is Kind.RATIONAL:
            dx = math.lcm(*(c.denominator for c in x.terms.values()))
            dy = math.lcm(*(c.denominator for c in y.terms.values()))
            xc = [c.numerator * (dx // c.denominator) for c in x.terms.values()]
            yc = [c.numerator * (dy // c.denominator) for c in y.terms.values()]
            self.denom = dx * dy
            self.dense = (n <= DENSE_MAX_DIM
                          and sum(map(abs, xc)) * sum(map(abs, yc)) < _INT64_LIMIT)
            dtype = np.int64
        else:
            xc = list(x.terms.values())
            yc = list(y.terms.values())
            self.denom = None
            self.dense = n <= DENSE_MAX_DIM
            dtype = np.float64
        self.m = len(xb)
        self.k = len(yb)
        if self.dense:
            self.size = 1 << n
            self.dtype = dtype
            self.xb = np.array(xb, dtype=np.uint64)
            self.yb = np.array(yb, dtype=np.uint64)
            self.yg = np.array(yg, dtype=np.uint64)
            self.xc = np.array(xc, dtype=dtype)
            self.yc = np.array(yc, dtype=dtype)
            self._qmask = np.uint64(self.qmask)
        else:
            self.xb, self.yb, self.yg, self.xc, self.yc = xb, yb, yg, xc, yc

    def leaf(self, i0: int, i1: int, j0: int, j1: int):
        """Partial product of rows [i0, i1) of x with rows [j0, j1) of y."""
        if self.dense:
            out = np.zeros(self.size, dtype=self.dtype)
            _kernels.walsh_leaf(self.xb, self.xc, self.yb, self.yg, self.yc, i0, i1, j0, j1,
                                self._qmask, out)
            return out
        return _leaf_py(self.xb[i0:i1], self.xc[i0:i1], self.yb[j0:j1], self.yg[j0:j1],
                        self.yc[j0:j1], self.qmask)

    def combine(self, head, tail):
        if self.dense:
            tail += head
            return tail
        if len(head) > len(tail):
            head, tail = tail, head
        for b, v in head.items():
            tail[b] = tail[b] + v if b in tail else v
        return tail

    def finish(self, acc) -> Multivector:
        if self.dense:
            idx = np.flatnonzero(acc)
            vals = acc[idx]
            if self.kind is Kind.FLOAT and not np.isfinite(vals).all():
                raise OverflowError("product coefficient overflowed to a non-finite value")
            acc = dict(zip(idx.tolist(), vals.tolist()))
        else:
            acc = {b: v for b, v in acc.items() if v != 0}
            if self.kind is Kind.FLOAT and not all(math.isfinite(v) for v in acc.values()):
                raise OverflowError("product coefficient overflowed to a non-finite value")
        if self.denom is not None:
            d = self.denom
            acc = {b: Fraction(v, d) for b, v in acc.items()}
        return Multivector._trusted(self.sig, self.kind, acc)


def _leaf_py(xb, xc, yb, yg, yc, qmask):
    acc: dict = {}
    get = acc.get
    for a, ca in zip(xb, xc):
        for b, gb, cb in zip(yb, yg, yc):
            # walsh(a, inverse_gray(b)) * twist(a, b), as one parity
            common = a & b
            v = ca * cb
            if ((a & gb).bit_count() + common.bit_count() + (common & qmask).bit_count()) & 1:
                v = -v
            k = a ^ b
            acc[k] = get(k, 0) + v
    return acc


def _trivial(x: Multivector, y: Multivector) -> Optional[Multivector]:
    check_compatible(x, y)
    if x.is_zero() or y.is_zero():
        return Multivector.zero(x.sig, x.kind)
    return None


def mul_sequential(x: Multivector, y: Multivector) -> Multivector:
    z = _trivial(x, y)
    if z is not None:
        return z
    ops = _Operands(x, y)
    return ops.finish(ops.leaf(0, ops.m, 0, ops.k))


def task_children(node, packsize: int, split: str = "packsize"):
    """Split rule of the task engine; ``None`` marks a leaf.

    ``node`` is ``(i0, i1, j0, j1)``.  The larger list is split (x on ties)
    into its first ``packsize`` terms and the rest, or at its midpoint.
    """
    i0, i1, j0, j1 = node
    m = i1 - i0
    k = j1 - j0
    if max(m, k) <= packsize:
        return None
    if m < k:
        cut = j0 + (packsize if split == "packsize" else (k + 1) // 2)
        return (i0, i1, j0, cut), (i0, i1, cut, j1)
    cut = i0 + (packsize if split == "packsize" else (m + 1) // 2)
    return (i0, cut, j0, j1), (cut, i1, j0, j1)


def mul_parallel_tasks(x: Multivector, y: Multivector, cfg: Optional[EngineConfig] = None,
                       stats: Optional[TaskStats] = None) -> Multivector:
    cfg = cfg or EngineConfig(engine="walsh-par-tasks")
    z = _trivial(x, y)
    if z is not None:
        return z
    ops = _Operands(x, y)
    packsize = cfg.leaf_size(ops.m, ops.k)
    if stats is not None:
        stats.packsize = packsize
    split = cfg.split
    acc = run_tree((0, ops.m, 0, ops.k),
                   lambda node: task_children(node, packsize, split),
                   lambda node: ops.leaf(*node),
                   ops.combine,
                   threads=cfg.thread_count,
                   stats=stats)
    return ops.finish(acc)


def mul_parallel_flat(x: Multivector, y: Multivector, cfg: Optional[EngineConfig] = None) -> Multivector:
    cfg = cfg or EngineConfig(engine="walsh-par-flat")
    z = _trivial(x, y)
    if z is not None:
        return z
    ops = _Operands(x, y)
    threads = cfg.thread_count
    blocks = even_blocks(ops.m, threads)
    parts = run_flat(blocks, lambda blk: ops.leaf(blk[0], blk[1], 0, ops.k), threads)
    acc = parts[0]
    for part in parts[1:]:
        acc = ops.combine(part, acc)
    return ops.finish(acc)


def mul_chevalley(x: Multivector, y: Multivector) -> Multivector:
    z = _trivial(x, y)
    if z is not None:
        return z
    p = x.sig.p
    acc: dict = {}
    y_terms = list(y.terms.items())
    for a, ca in x.terms.items():
        # a.y = e_i1.(e_i2.(...(e_ik.y))) with i1 < i2 < ... < ik
        cur = y_terms
        for i in reversed(generators(a)):
            bit = 1 << (i - 1)
            below = bit - 1
            nxt = []
            for mono, c in cur:
                neg = (mono & below).bit_count() & 1
                if mono & bit:
                    mono ^= bit
                    if i > p:
                        neg ^= 1
                else:
                    mono |= bit
                nxt.append((mono, -c if neg else c))
            cur = nxt
        for mono, c in cur:
            v = ca * c
            acc[mono] = acc[mono] + v if mono in acc else v
    return Multivector(x.sig, acc, x.kind)


def mul_oracle(x: Multivector, y: Multivector) -> Multivector:
    z = _trivial(x, y)
    if z is not None:
        return z
    sig = x.sig
    acc: dict = {}
    for a, ca in x.terms.items():
        for b, cb in y.terms.items():
            s, blade = oracle_blade_product(a, b, sig)
            acc[blade] = acc.get(blade, 0) + s * ca * cb
    return Multivector(sig, acc, x.kind)


def multiply(x: Multivector, y: Multivector, cfg: Optional[EngineConfig] = None,
             stats: Optional[TaskStats] = None) -> Multivector:
    """Product with the engine named in ``cfg``."""
    cfg = cfg or EngineConfig()
    if cfg.engine == "walsh-seq":
        return mul_sequential(x, y)
    if cfg.engine == "walsh-par-tasks":
        return mul_parallel_tasks(x, y, cfg, stats)
    if cfg.engine == "walsh-par-flat":
        return mul_parallel_flat(x, y, cfg)
    if cfg.engine == "chevalley":
        return mul_chevalley(x, y)
    return mul_oracle(x, y)


def engine(name: str) -> Callable[..., Multivector]:
    """Engine as ``f(x, y, cfg)`` by name."""
    if name not in ENGINE_NAMES:
        raise ValueError(f"unknown engine {name!r}")

    def run(x, y, cfg: Optional[EngineConfig] = None):
        base = cfg or EngineConfig()
        return multiply(x, y, EngineConfig(name, base.packsize, base.threads, base.dynamic_packsize, base.split))
    run.__name__ = name.replace("-", "_")
    return run


def parallel_sum(lo: int, hi: int, threads: int = 2, mode: str = "tasks", cutoff: int = 1000) -> int:
    """Sum of the integers lo..hi on the fork-join runtime.

    ``tasks`` halves the range until it is shorter than ``cutoff``;
    ``flat`` gives each of ``threads`` dedicated threads one contiguous block.
    """
    if hi < lo:
        return 0
    if mode == "flat":
        blocks = [(lo + s, lo + e - 1) for s, e in even_blocks(hi - lo + 1, threads)]
        parts = run_flat(blocks, lambda r: sum(range(r[0], r[1] + 1)), threads)
        return sum(parts)
    if mode != "tasks":
        raise ValueError(f"mode must be 'tasks' or 'flat', got {mode!r}")

    def halves(r):
        i, j = r
        if j - i < cutoff:
            return None
        mid = (j - i) // 2 + i
        return (i, mid), (mid + 1, j)

    return run_tree((lo, hi), halves, lambda r: sum(range(r[0], r[1] + 1)),
                    lambda a, b: a + b, threads=threads)
