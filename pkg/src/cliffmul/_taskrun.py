"""Fork-join runtime: recursive split-then-combine over a fixed tree.

The tree is generated lazily in postfix order and leaves are handed to a
shared thread pool with a bounded look-ahead window.  The caller reduces in
postfix order, so partial results are always combined in split order and
never in completion order.
"""

from __future__ import annotations

import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, TypeVar

Node = TypeVar("Node")
R = TypeVar("R")

_COMBINE = object()

_pools: dict[int, ThreadPoolExecutor] = {}
_pools_lock = threading.Lock()
_local = threading.local()


def hardware_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except (AttributeError, OSError):
        return os.cpu_count() or 1


def _mark_worker():
    _local.worker = True


def in_worker() -> bool:
    return getattr(_local, "worker", False)


def pool(threads: int) -> ThreadPoolExecutor:
    with _pools_lock:
        ex = _pools.get(threads)
        if ex is None:
            ex = ThreadPoolExecutor(max_workers=threads, thread_name_prefix=f"cliffmul-{threads}",
                                    initializer=_mark_worker)
            _pools[threads] = ex
        return ex


@dataclass
class TaskStats:
    leaves: int = 0
    splits: int = 0
    max_depth: int = 0
    packsize: int = 0


def _postfix(root, expand):
    # tail child is pushed last so it is emitted first; the head result then
    # sits on top of the tail result when the combine op arrives
    stack = [(root, 0)]
    while stack:
        item = stack.pop()
        if item is _COMBINE:
            yield _COMBINE
            continue
        node, depth = item
        parts = expand(node)
        if parts is None:
            yield node, depth
        else:
            head, tail = parts
            stack.append(_COMBINE)
            stack.append((head, depth + 1))
            stack.append((tail, depth + 1))


def run_tree(root: Node,
             expand: Callable[[Node], Optional[tuple[Node, Node]]],
             compute: Callable[[Node], R],
             combine: Callable[[R, R], R],
             threads: int = 1,
             stats: Optional[TaskStats] = None,
             window: Optional[int] = None) -> R:
    """Evaluate ``root``: leaves (``expand`` returns None) are computed,
    internal nodes combine ``combine(head, tail)``.

    With ``threads > 1`` leaves run on the shared pool; the combine tree is
    identical for every thread count.
    """
    ops = _postfix(root, expand)
    values: list = []

    def note_leaf(depth):
        if stats is not None:
            stats.leaves += 1
            stats.max_depth = max(stats.max_depth, depth)

    def reduce_top():
        head = values.pop()
        tail = values.pop()
        values.append(combine(head, tail))
        if stats is not None:
            stats.splits += 1

    if threads <= 1 or in_worker():
        for op in ops:
            if op is _COMBINE:
                reduce_top()
            else:
                node, depth = op
                note_leaf(depth)
                values.append(compute(node))
        return values.pop()

    ex = pool(threads)
    window = window or 4 * threads
    pending: deque = deque()
    outstanding = 0
    exhausted = False
    try:
        while True:
            while not exhausted and outstanding < window:
                op = next(ops, None)
                if op is None:
                    exhausted = True
                elif op is _COMBINE:
                    pending.append(op)
                else:
                    node, depth = op
                    note_leaf(depth)
                    pending.append(ex.submit(compute, node))
                    outstanding += 1
            if not pending:
                break
            op = pending.popleft()
            if op is _COMBINE:
                reduce_top()
            else:
                values.append(op.result())
                outstanding -= 1
    except BaseException:
        for op in pending:
            if op is not _COMBINE:
                op.cancel()
        raise
    return values.pop()


def run_flat(blocks: Sequence[Node], compute: Callable[[Node], R], threads: int) -> list[R]:
    """One dedicated thread per block; wait for all; results in block order."""
    if threads <= 1 or len(blocks) <= 1:
        return [compute(b) for b in blocks]
    results: list = [None] * len(blocks)
    errors: list[BaseException] = []

    def work(k, block):
        try:
            results[k] = compute(block)
        except BaseException as exc:  # re-raised in the caller
            errors.append(exc)

    workers = [threading.Thread(target=work, args=(k, b), name=f"cliffmul-flat-{k}")
               for k, b in enumerate(blocks)]
    for t in workers:
        t.start()
    for t in workers:
        t.join()
    if errors:
        raise errors[0]
    return results


def even_blocks(length: int, parts: int) -> list[tuple[int, int]]:
    """Contiguous [start, stop) blocks; the first ``length % parts`` are one longer."""
    parts = max(1, min(parts, length)) if length else 1
    base, extra = divmod(length, parts)
    out = []
    start = 0
    for k in range(parts):
        stop = start + base + (1 if k < extra else 0)
        out.append((start, stop))
        start = stop
    return out
