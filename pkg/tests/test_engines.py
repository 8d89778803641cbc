import random
import threading
from fractions import Fraction

import pytest

from cliffmul._taskrun import TaskStats, even_blocks, run_tree
from cliffmul.blades import Signature
from cliffmul.engines import (ENGINE_NAMES, EngineConfig, engine, mul_chevalley, mul_oracle, mul_parallel_flat,
                              mul_parallel_tasks, mul_sequential, multiply, parallel_sum, task_children)
from cliffmul.multivector import Kind, Multivector, SignatureMismatch, parse

from .conftest import random_float_mv, random_rational_mv, signatures

ALL = [mul_sequential, mul_parallel_tasks, mul_parallel_flat, mul_chevalley, mul_oracle]


def leaf_recurrence(m, k, packsize, split="packsize"):
    """Leaf count of the split rule, by explicit memoized recursion."""
    memo = {}

    def count(m, k):
        if (m, k) in memo:
            return memo[(m, k)]
        if max(m, k) <= packsize:
            r = 1
        elif m < k:
            cut = packsize if split == "packsize" else (k + 1) // 2
            r = count(m, cut) + count(m, k - cut)
        else:
            cut = packsize if split == "packsize" else (m + 1) // 2
            r = count(cut, k) + count(m - cut, k)
        memo[(m, k)] = r
        return r

    # iterate the diagonal bottom-up so the recursion stays shallow
    for a in range(packsize, m + 1, packsize):
        for b in range(packsize, k + 1, packsize):
            count(a, b)
    return count(m, k)


@pytest.mark.parametrize("mul", ALL, ids=lambda f: f.__name__)
def test_small_examples(mul):
    s1 = Signature(1, 0)
    assert mul(parse("e1", s1), parse("e1", s1)) == parse("Id", s1)
    assert mul(parse("e1", Signature(0, 1)), parse("e1", Signature(0, 1))) == parse("-Id", Signature(0, 1))
    assert mul(parse("1 + e1", s1), parse("1 - e1", s1)).is_zero()
    s3 = Signature(3, 0)
    x = parse("2 - e1we3 + 1/3*e2", s3)
    assert mul(x, parse("Id", s3)) == x
    assert mul(parse("Id", s3), x) == x
    assert mul(parse("e2", Signature(2, 0)), parse("e1", Signature(2, 0))) == parse("-e1we2", Signature(2, 0))
    assert mul(parse("e1we2", s3), parse("e2we3", s3)) == parse("e1we3", s3)
    assert mul(Multivector.zero(s3), x).is_zero()
    assert mul(x, Multivector.zero(s3)).is_zero()


def test_oracle_engine_values():
    # (1+e1)(1-e1) expanded by the oracle engine term by term
    s1 = Signature(1, 0)
    one, e1 = parse("Id", s1), parse("e1", s1)
    expanded = mul_oracle(one, one) - mul_oracle(one, e1) + mul_oracle(e1, one) - mul_oracle(e1, e1)
    assert expanded.is_zero()


def test_chevalley_single_generator():
    s = Signature(4, 0)
    e1 = parse("e1", s)
    for m in range(0, 16, 2):
        mono = Multivector(s, {m: 1})
        assert mul_chevalley(e1, mono) == Multivector(s, {m | 1: 1})


@pytest.mark.parametrize("mul", ALL, ids=lambda f: f.__name__)
def test_signature_mismatch(mul):
    with pytest.raises(SignatureMismatch):
        mul(parse("e1", Signature(2, 0)), parse("e1", Signature(1, 1)))
    with pytest.raises(SignatureMismatch):
        mul(parse("e1", Signature(2, 0)), parse("e1", Signature(2, 0), Kind.FLOAT))


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(engine="fast")
    with pytest.raises(ValueError):
        EngineConfig(packsize=0)
    with pytest.raises(ValueError):
        EngineConfig(threads=0)
    with pytest.raises(ValueError):
        EngineConfig(split="thirds")
    assert EngineConfig(threads=3).thread_count == 3
    assert EngineConfig().thread_count >= 1
    assert EngineConfig(dynamic_packsize=True, threads=2).leaf_size(1000, 10) == 125
    assert EngineConfig(dynamic_packsize=True, threads=8).leaf_size(20, 10) == 4


@pytest.mark.parametrize("sig", list(signatures(6)), ids=str)
def test_engines_agree_rational(sig, rng):
    for _ in range(15):
        x = random_rational_mv(rng, sig, 14)
        y = random_rational_mv(rng, sig, 14)
        ref = mul_oracle(x, y)
        for name in ENGINE_NAMES:
            for cfg in (EngineConfig(name, packsize=2, threads=3), EngineConfig(name, packsize=5, threads=1,
                                                                               split="midpoint")):
                assert multiply(x, y, cfg) == ref


def test_python_fallback_paths(rng):
    # huge numerators skip the int64 kernel; n > 16 skips dense accumulators
    big = Signature(4, 1)
    x = Multivector(big, {rng.randrange(32): Fraction(rng.randint(1, 2**70), rng.randint(1, 9)) for _ in range(12)})
    y = Multivector(big, {rng.randrange(32): Fraction(-rng.randint(1, 2**70), 7) for _ in range(12)})
    ref = mul_oracle(x, y)
    assert mul_sequential(x, y) == ref
    assert mul_parallel_tasks(x, y, EngineConfig(packsize=3, threads=2)) == ref
    wide = Signature(11, 9)
    x = random_rational_mv(rng, wide, 30)
    y = random_rational_mv(rng, wide, 30)
    ref = mul_oracle(x, y)
    for name in ENGINE_NAMES:
        assert multiply(x, y, EngineConfig(name, packsize=4, threads=2)) == ref
    xf, yf = x.to_kind(Kind.FLOAT), y.to_kind(Kind.FLOAT)
    dense_free = mul_parallel_tasks(xf, yf, EngineConfig(packsize=4, threads=2))
    assert dense_free == mul_parallel_tasks(xf, yf, EngineConfig(packsize=4, threads=1))
    for b, c in ref.terms.items():
        assert dense_free.terms[b] == pytest.approx(float(c), rel=1e-12)


def test_float_paths_match_rational(rng):
    sig = Signature(5, 2)
    for _ in range(20):
        x = random_rational_mv(rng, sig, 20)
        y = random_rational_mv(rng, sig, 20)
        exact = mul_sequential(x, y)
        approx = mul_sequential(x.to_kind(Kind.FLOAT), y.to_kind(Kind.FLOAT))
        assert set(approx.terms) <= set(exact.terms)
        for b, c in exact.terms.items():
            assert approx.coeff(b) == pytest.approx(float(c), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("packsize", [1, 2, 4, 16, 64])
def test_packsize_independence(packsize, rng):
    sig = Signature(4, 2)
    for _ in range(10):
        x = random_rational_mv(rng, sig, 64)
        y = random_rational_mv(rng, sig, 64)
        assert mul_parallel_tasks(x, y, EngineConfig(packsize=packsize, threads=2)) == mul_sequential(x, y)


@pytest.mark.parametrize("m,k,packsize", [(1000, 1000, 16), (5, 7, 1), (33, 17, 4), (64, 64, 64), (1, 200, 16)])
def test_split_recurrence(m, k, packsize):
    for split in ("packsize", "midpoint"):
        stats = TaskStats()
        run_tree((0, m, 0, k), lambda nd: task_children(nd, packsize, split), lambda nd: 0,
                 lambda a, b: a + b, stats=stats)
        assert stats.leaves == leaf_recurrence(m, k, packsize, split)
        assert stats.splits == stats.leaves - 1
    assert leaf_recurrence(m, k, packsize) == -(-m // packsize) * -(-k // packsize)


def test_leaves_cover_cartesian_product():
    seen = []

    def leaf(nd):
        i0, i1, j0, j1 = nd
        seen.extend((i, j) for i in range(i0, i1) for j in range(j0, j1))
        return 0

    run_tree((0, 37, 0, 23), lambda nd: task_children(nd, 4), leaf, lambda a, b: a + b)
    assert sorted(seen) == [(i, j) for i in range(37) for j in range(23)]


def test_combine_order_is_structural():
    # string concatenation is non-commutative, so the result exposes the tree
    def children(r):
        i, j = r
        return None if j - i < 2 else ((i, (i + j) // 2), ((i + j) // 2 + 1, j))

    expected = run_tree((0, 40), children, lambda r: f"[{r[0]}-{r[1]}]", lambda h, t: f"({h}{t})", threads=1)
    for threads in (2, 4, 8):
        for _ in range(5):
            assert run_tree((0, 40), children, lambda r: f"[{r[0]}-{r[1]}]", lambda h, t: f"({h}{t})",
                            threads=threads, window=3) == expected


def test_empty_inputs_spawn_no_tasks():
    sig = Signature(3, 0)
    stats = TaskStats()
    assert mul_parallel_tasks(Multivector.zero(sig), parse("e1", sig), EngineConfig(threads=2), stats).is_zero()
    assert stats.leaves == 0


def test_leaf_exception_propagates():
    def boom(r):
        if r == (3, 3):
            raise ZeroDivisionError("leaf failed")
        return 1

    def children(r):
        i, j = r
        return None if i == j else ((i, (i + j) // 2), ((i + j) // 2 + 1, j))

    with pytest.raises(ZeroDivisionError):
        run_tree((0, 9), children, boom, lambda a, b: a + b, threads=3)


def test_concurrent_callers():
    sig = Signature(6, 1)
    rng = random.Random(5)
    pairs = [(random_rational_mv(rng, sig, 40), random_rational_mv(rng, sig, 40)) for _ in range(8)]
    expected = [mul_sequential(x, y) for x, y in pairs]
    results = [None] * len(pairs)

    def work(k):
        x, y = pairs[k]
        results[k] = mul_parallel_tasks(x, y, EngineConfig(packsize=3, threads=2))

    ts = [threading.Thread(target=work, args=(k,)) for k in range(len(pairs))]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert results == expected


def test_flat_threads_one_is_sequential(rng):
    sig = Signature(7, 0)
    x = random_float_mv(rng, sig, 100)
    y = random_float_mv(rng, sig, 100)
    assert mul_parallel_flat(x, y, EngineConfig(threads=1)) == mul_sequential(x, y)


def test_even_blocks():
    assert even_blocks(10, 3) == [(0, 4), (4, 7), (7, 10)]
    assert even_blocks(2, 4) == [(0, 1), (1, 2)]
    assert even_blocks(0, 4) == [(0, 0)]


@pytest.mark.parametrize("mode", ["tasks", "flat"])
@pytest.mark.parametrize("threads", [1, 2, 3])
def test_parallel_sum(mode, threads):
    assert parallel_sum(1, 123_457, threads, mode) == 123_457 * 123_458 // 2
    assert parallel_sum(5, 4, threads, mode) == 0


def test_named_engine_wrapper():
    sig = Signature(2, 0)
    f = engine("chevalley")
    assert f(parse("e2", sig), parse("e1", sig)) == parse("-e1we2", sig)
    with pytest.raises(ValueError):
        engine("nope")


@pytest.mark.parametrize("sig", [Signature(3, 3), Signature(6, 0), Signature(2, 4)], ids=str)
def test_algebra_laws(sig, rng):
    for _ in range(40):
        x, y, z = (random_rational_mv(rng, sig, 12) for _ in range(3))
        assert mul_sequential(mul_sequential(x, y), z) == mul_sequential(x, mul_sequential(y, z))
        assert mul_sequential(x, y + z) == mul_sequential(x, y) + mul_sequential(x, z)
        assert mul_sequential(x + y, z) == mul_sequential(x, z) + mul_sequential(y, z)
