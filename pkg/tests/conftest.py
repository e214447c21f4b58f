import pathlib
import re

import pytest

from kvlog.models import load_model

ROOT = pathlib.Path(__file__).resolve().parents[1]

CRITERIA = {
    1: "shipped model pair: binary diamond differs, verified distinguisher",
    2: "binary-diamond expansion and reduction preserve truth (500 + 500)",
    3: "FO truth equals derived-ternary truth of the translation (500)",
    4: "ternary truth survives the tree-and-values conversion (200)",
    5: "frame validator agrees with the naive oracle on all 3-state structures",
    6: "soundness fuzz is clean for all three systems; bogus schema refuted",
    7: "every shipped proof script accepted, every mutant rejected as annotated",
    8: "bisimilar pairs agree on sampled formulas; others get distinguishers",
    9: "split/unravel/value-assignment structural guarantees hold throughout",
}


@pytest.fixture(scope="session")
def models_dir():
    return ROOT / "models"


@pytest.fixture(scope="session")
def proofs_dir():
    return ROOT / "proofs"


@pytest.fixture(scope="session")
def left_model(models_dir):
    return load_model(str(models_dir / "binary_vs_unary_left.json"))[0]


@pytest.fixture(scope="session")
def right_model(models_dir):
    return load_model(str(models_dir / "binary_vs_unary_right.json"))[0]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, ()):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)",
                          rep.nodeid)
            if not m:
                continue
            if rep.when != "call" and rep.passed:
                continue
            num = int(m.group(1))
            verdict = "PASS" if rep.passed else "FAIL"
            dur = getattr(rep, "duration", 0.0)
            rows.setdefault(num, (verdict, dur))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(rows):
        verdict, dur = rows[num]
        terminalreporter.write_line(
            f"criterion {num}: {verdict} ({dur:.1f}s) - {CRITERIA[num]}")
