import math
from fractions import Fraction

import numpy as np
import pytest

from accelsim.coding import oneffsets
from accelsim.schedule import DenseSchedule, PromotionPattern

# effectual positions (lane, step) of the 4-lane, 4-step walkthrough filter
FIG_EFFECTUAL = [(0, 0), (1, 0), (3, 0), (1, 1), (2, 2), (3, 3)]

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def fig_filter() -> DenseSchedule:
    values = np.zeros((4, 4), dtype=np.int16)
    for lane, step in FIG_EFFECTUAL:
        values[step, lane] = 10 * step + lane + 1
    return DenseSchedule(0, 4, values, 16, (1, 1, 16))


@pytest.fixture
def fig():
    return fig_filter()


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def random_pattern(rng, n, h, max_sites):
    pool = [(dl, ds) for dl in range(n) for ds in range(1, h + 1)]
    count = rng.randint(0, min(max_sites, len(pool)))
    return PromotionPattern(h, tuple(rng.sample(pool, count)))


def random_tile(rng, n=16, max_steps=12, max_k=8, sparsity=None):
    steps = rng.randint(1, max_steps)
    sp = rng.choice([0.0, 0.3, 0.6, 0.9]) if sparsity is None else sparsity
    out = []
    for f in range(rng.randint(1, max_k)):
        vals = np.array([[0 if rng.random() < sp else rng.choice([-3, -1, 2, 7])
                          for _ in range(n)] for _ in range(steps)], dtype=np.int16)
        out.append(DenseSchedule(f, n, vals, steps * n, (1, 1, steps * n)))
    return out


def brute_force(layer, w, a):
    total = wa_ = aa = ww = 0
    wap = wae = Fraction(0)
    s = layer.stride
    for ox in range(layer.ox):
        for oy in range(layer.oy):
            for k in range(layer.kk):
                for fx in range(layer.fx):
                    for fy in range(layer.fy):
                        for c in range(layer.c):
                            av = int(a[ox * s + fx, oy * s + fy, c]) & 0xFFFF
                            wv = int(w[k, fx, fy, c])
                            total += 1
                            aa += av != 0
                            ww += wv != 0
                            if wv:
                                wa_ += av != 0
                                wap += Fraction(av.bit_length(), 16)
                                wae += Fraction(len(oneffsets(av)), 16)
    r = lambda x: math.inf if x == 0 else Fraction(total) / x
    return tuple(r(x) for x in (aa, ww, wa_, wap, wae))
