import random
from contextlib import contextmanager
from pathlib import Path

import pytest

from certikit.bdd import BDD, BinOp

MODELS = Path(__file__).resolve().parents[1] / "src" / "certikit" / "models"


def random_table(rng: random.Random, n: int) -> list[int]:
    return [rng.randrange(2) for _ in range(1 << n)]


def from_table(bdd: BDD, table, vars_=None) -> int:
    """BDD of a truth table; bit j of the index is variable ``vars_[j]``."""
    m = len(table).bit_length() - 1
    vars_ = list(range(m)) if vars_ is None else list(vars_)
    order = sorted(range(m), key=lambda j: vars_[j])

    def rec(depth: int, base: int) -> int:
        if depth == m:
            return int(table[base])
        j = order[depth]
        lo = rec(depth + 1, base)
        hi = rec(depth + 1, base | (1 << j))
        return bdd.reduce(vars_[j], lo, hi)

    return rec(0, 0)


def table_of(bdd: BDD, f: int, n: int) -> list[int]:
    return [bdd.evaluate(f, [(i >> j) & 1 for j in range(n)]) for i in range(1 << n)]


def random_bdd(bdd: BDD, rng: random.Random, n: int, density: float | None = None) -> int:
    p = rng.random() if density is None else density
    return from_table(bdd, [int(rng.random() < p) for _ in range(1 << n)])


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240917)


ALL_OPS = list(BinOp)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion.

    The body fills the yielded dict with numbers worth reporting.
    """
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    @contextmanager
    def run(number: int, title: str):
        detail: dict = {}
        try:
            yield detail
        except BaseException:
            lines[number] = _line(number, "FAIL", title, detail)
            raise
        lines[number] = _line(number, "PASS", title, detail)

    return run


def _line(number, verdict, title, detail):
    extra = ", ".join(f"{k}={v}" for k, v in detail.items())
    return f"criterion {number}: {verdict}  {title}" + (f"  ({extra})" if extra else "")


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for number in sorted(lines):
            terminalreporter.write_line(lines[number])
