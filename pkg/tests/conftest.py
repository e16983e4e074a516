import csv

import numpy as np
import pytest

from stratfair.data import LAW_COLUMNS


def write_law_csv(path, n=600, seed=0, noise=0.3):
    """Synthetic file with the Law School column schema.

    ``zgpa`` is a noisy affine function of the other features and ``pass_bar``
    a logistic draw on ``zgpa``; ``racetxt`` is a binary group id.
    """
    rng = np.random.default_rng(seed)
    race = (rng.random(n) < 0.3).astype(int)
    lsat = rng.normal(36 - 4 * race, 5, n)
    ugpa = np.clip(rng.normal(3.2 - 0.2 * race, 0.4, n), 1.5, 4.0)
    cols = {
        "decile1b": rng.integers(1, 11, n),
        "decile3": rng.integers(1, 11, n),
        "lsat": np.round(lsat, 1),
        "ugpa": np.round(ugpa, 2),
        "zfygpa": np.round(rng.normal(0, 1, n), 3),
        "fulltime": rng.integers(1, 3, n),
        "fam_inc": rng.integers(1, 6, n),
        "male": rng.integers(0, 2, n),
        "racetxt": race,
        "tier": rng.integers(1, 7, n),
    }
    zgpa = 0.08 * (cols["lsat"] - 36) + 0.9 * (cols["ugpa"] - 3.2) + 0.4 * cols["zfygpa"] + rng.normal(0, noise, n)
    cols["zgpa"] = np.round(zgpa, 4)
    cols["pass_bar"] = (rng.random(n) < 1 / (1 + np.exp(-(1.5 + 2.5 * zgpa)))).astype(int)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LAW_COLUMNS)
        for i in range(n):
            w.writerow([cols[c][i] for c in LAW_COLUMNS])
    return path


@pytest.fixture
def law_csv(tmp_path):
    return str(write_law_csv(tmp_path / "law.csv"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, title, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} | {detail}")
