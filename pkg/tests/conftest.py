import random
from fractions import Fraction

import pytest

from cliffmul import _kernels
from cliffmul.blades import Signature
from cliffmul.multivector import Kind, Multivector

_acceptance_lines = []


def signatures(max_dim, min_dim=0):
    for n in range(min_dim, max_dim + 1):
        for p in range(n + 1):
            yield Signature(p, n - p)


def random_rational_mv(rng: random.Random, sig: Signature, max_terms: int = 10) -> Multivector:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        terms[rng.randrange(1 << sig.n)] = Fraction(rng.choice((-1, 1)) * rng.randint(1, 30), rng.randint(1, 7))
    return Multivector(sig, terms, Kind.RATIONAL)


def random_float_mv(rng: random.Random, sig: Signature, max_terms: int = 10) -> Multivector:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        terms[rng.randrange(1 << sig.n)] = rng.uniform(-10, 10)
    return Multivector(sig, terms, Kind.FLOAT)


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    _kernels.warm_up()


@pytest.fixture
def rng(request):
    return random.Random(request.node.nodeid)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_lines.append(f"{'PASS' if report.passed else 'FAIL'}  {name}")


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
