"""One test per acceptance criterion, each running its registered experiment at the default grid.

Every test prints a single PASS/FAIL line (collected into the terminal summary)
and then asserts that the report passed within the stated runtime budget.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from hardyhalf.experiments import make_config, run

CRITERIA = [
    (1, "mobius-invariance", 120),
    (2, "cayley-identities", 60),
    (3, "plaplacian-sign", 120),
    (4, "weak-form", 300),
    (5, "vp-bound", 60),
    (6, "critical-hardy", 300),
    (7, "improved-hardy", 900),
    (8, "limit-p-to-N", 60),
    (9, "fp-properties", 600),
    (10, "tm-scan", 300),
    (11, "no-weight-rn", 300),
    (12, "asym-counterexample", 300),
    (13, "bliss-limit", 300),
    (14, "transplant-isometries", 300),
    (15, "determinism", 300),
]


def _failing_rows(report, limit=3):
    bad = [r for r in report.rows if r.margin > 0.0 or not r.converged]
    return "; ".join(f"{r.inputs} margin={r.margin:.3g}" for r in bad[:limit])


@pytest.mark.slow
@pytest.mark.parametrize("number,name,budget", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_criterion(number, name, budget):
    report = run(make_config({"experiment": name}), jobs=1, progress=False)
    ok = report.passed and report.runtime_seconds <= budget
    line = (f"criterion {number:2d} {name:<22s} {'PASS' if ok else 'FAIL'}  "
            f"worst_violation={report.worst_violation:.3g} rows={len(report.rows)} "
            f"runtime={report.runtime_seconds:.1f}s/{budget}s")
    ACCEPTANCE_LINES.append(line)
    print(line)
    if not report.all_converged:
        pytest.fail(f"{name}: unconverged rows: {_failing_rows(report)}", pytrace=False)
    if not report.passed:
        pytest.fail(f"{name}: violations: {_failing_rows(report)}", pytrace=False)
    if report.runtime_seconds > budget:
        pytest.fail(f"{name}: runtime {report.runtime_seconds:.1f}s over {budget}s", pytrace=False)
