"""Acceptance suite: every verification case must pass at its pinned
tolerance.

Each test prints one pass/fail line; run with ``pytest -s`` (or ``-v``) to
see them.  The cases live in qflatlab.verification and back the
``qflatlab verify`` command, so the CLI and this module exercise the same
checks.
"""

import pytest

from qflatlab.verification import CASES, run_case

_RESULTS = {}


def _run(case_id):
    if case_id not in _RESULTS:
        _RESULTS[case_id] = run_case(case_id)
    result = _RESULTS[case_id]
    status = "PASS" if result.status == "passed" else "FAIL"
    print(f"[{status}] {result.id}: {result.description} ({result.elapsed:.1f}s)")
    detail = "\n".join(
        f"  {c.quantity}: expected {c.expected} got {c.got} (tol {c.tolerance})"
        for c in result.checks if not c.passed)
    if result.error:
        detail = (detail + "\n" if detail else "") + f"  error: {result.error}"
    assert result.status == "passed", f"{case_id} failed:\n{detail}"


def test_criterion_01_entropy_identity():
    _run("entropy_identity")


def test_criterion_02_distance_exponent():
    _run("distance_exponent")


def test_criterion_03_bounded_diameter():
    _run("bounded_diameter")


def test_criterion_04_potential_golden():
    _run("potential_golden")


def test_criterion_05_potential_volume_growth():
    _run("potential_volume_growth")


def test_criterion_06_decomposition():
    _run("decomposition")


def test_criterion_07_scalar_criterion():
    _run("scalar_criterion")


def test_criterion_08_cohn_vossen():
    _run("cohn_vossen")


def test_criterion_09_huber_thresholds():
    _run("huber_thresholds")


def test_criterion_10_polyharmonic_dimensions():
    _run("polyharmonic_dimensions")


def test_criterion_11_green_inverse():
    _run("green_inverse")


def test_criterion_12_determinism():
    _run("determinism")


def test_full_suite_within_budget():
    # every case ran above (cached); the complete sweep must fit the
    # 15-minute desk-scale budget
    for case_id, _desc, _fn, _budget in CASES:
        _run(case_id)
    total = sum(r.elapsed for r in _RESULTS.values())
    print(f"[INFO] full verification suite: {total:.1f}s")
    assert total <= 900.0
