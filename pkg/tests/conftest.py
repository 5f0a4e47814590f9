import numpy as np
import pytest

SEED = 20240517


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def probes(rng, n, dim, lo=-2.0, hi=2.0):
    return rng.uniform(lo, hi, size=(n, dim))


def annulus_probes(rng, n, r_min=0.25, r_max=2.0):
    # uniform in area
    r = np.sqrt(rng.uniform(r_min**2, r_max**2, n))
    th = rng.uniform(0.0, 2 * np.pi, n)
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


# criterion number -> (passed, summary); filled by test_acceptance.py
CRITERIA = {}


def record_criterion(number, title, checks):
    """Store one acceptance line; ``checks`` maps a label to (ok, measured)."""
    ok = all(passed for passed, _ in checks.values())
    detail = "; ".join(f"{k} {v}" for k, (_, v) in checks.items())
    CRITERIA[number] = (ok, f"{title}: {detail}")
    print(f"criterion {number} {'PASS' if ok else 'FAIL'} {title}: {detail}")
    failed = [k for k, (passed, _) in checks.items() if not passed]
    assert not failed, f"criterion {number} failed: {', '.join(failed)}"


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        ok, text = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {text}")
