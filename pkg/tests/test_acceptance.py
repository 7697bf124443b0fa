"""Acceptance gate: every verification suite at its stated scale and tolerance.

Each test prints one PASS/FAIL line per criterion (visible with pytest -s, and
in the captured output on failure) and asserts the whole suite passed.
"""

from bmcouple.acceptance import (
    algebra_suite,
    consistency_suite,
    distance_law_suite,
    exact_invariant_suite,
    index_form_suite,
    infeasibility_suite,
    marginal_suite,
    max_principle_suite,
    shyness_suite,
)


def report(result) -> None:
    print()
    for line in result["lines"]:
        status = "PASS" if line["ok"] else "FAIL"
        print(f"[{status}] {result['suite']} / {line['label']}: {line['detail']}")
    assert result["pass"], f"suite {result['suite']} failed"


def test_01_algebra_suite():
    report(algebra_suite(n_pairs=10_000, n_alpha=1000))


def test_02_index_form_suite():
    report(index_form_suite())


def test_03_exact_invariant_suite():
    report(exact_invariant_suite(n_steps=1_000_000))


def test_04_distance_law_suite():
    report(distance_law_suite(rho0=1.0, n_paths=200, h_ladder=(4e-3, 2e-3, 1e-3, 5e-4)))


def test_05_consistency_suite():
    report(consistency_suite(rho0=1.0, n_paths=200))


def test_06_marginal_suite():
    report(marginal_suite(rho0=1.0, n_paths=10_000))


def test_07_infeasibility_suite():
    report(infeasibility_suite(rho0=1.0))


def test_08_shyness_suite():
    report(shyness_suite(rho0=0.5, eps=0.4, t_final=10.0, n_paths=500))


def test_09_max_principle_suite():
    report(max_principle_suite(cap_angle=0.8, n_paths=10_000))
