import numpy as np
import pytest
from hypothesis import settings

from fastcv import Dataset

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20161017)


def separable_dataset(n_per_class=10, n_classes=2, p=3, gap=20.0, seed=0):
    """Tight blobs far apart along the first coordinate axes."""
    r = np.random.default_rng(seed)
    xs, ys = [], []
    for c in range(n_classes):
        centre = np.zeros(p)
        centre[c % p] = gap * (1 if c < p else -1)
        xs.append(centre + 0.1 * r.standard_normal((n_per_class, p)))
        ys.append(np.full(n_per_class, c + 1))
    return Dataset(np.vstack(xs), np.concatenate(ys), n_classes)


def noise_dataset(n=200, p=20, n_classes=2, seed=0):
    r = np.random.default_rng(seed)
    y = np.arange(n) % n_classes + 1
    return Dataset(r.standard_normal((n, p)), r.permutation(y), n_classes)


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def record_acceptance(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number} ({title}): {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
