"""Acceptance suite: one test per criterion, at the stated scales and
tolerances.  Each test prints a pass/fail line; the long-running
double-slit study is excluded from the default run (set ELM_LONG_TESTS=1).
"""

import os

import numpy as np
import pytest

from elmint import verify


def _report(criterion, results):
    ok = all(r.passed for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"  [{mark}] {r.name}: {r.detail}")
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {criterion}: " + "; ".join(
        f"{r.name} ({r.detail})" for r in results if not r.passed
    )


def test_criterion_01_quadrature_exactness():
    _report(1, verify.suite_quadrature())


def test_criterion_02_hermite_reproduction():
    _report(2, verify.suite_hermite())


def test_criterion_03_residual_correctness():
    _report(3, verify.suite_residual())


@pytest.fixture(scope="module")
def symplectic_results():
    return verify.suite_symplectic()


def test_criterion_04_machine_precision_convergence(symplectic_results):
    _report(4, symplectic_results[:1])


def test_criterion_05_numerical_symplecticity(symplectic_results):
    _report(5, symplectic_results[1:])


def test_criterion_06_order_of_accuracy():
    _report(6, verify.suite_order())


def test_criterion_07_long_horizon_ode_energy():
    _report(7, verify.suite_energy_ode())


@pytest.fixture(scope="module")
def energy_1d_results():
    return verify.suite_energy_1d()


def test_criterion_08_wave_1d_energy(energy_1d_results):
    _report(8, energy_1d_results[:2])


def test_criterion_09_baseline_agreement(energy_1d_results):
    _report(9, energy_1d_results[2:])


def test_criterion_10_wave_2d():
    _report(10, verify.suite_energy_2d())


def test_criterion_11_interface():
    _report(11, verify.suite_interface())


def test_criterion_12_learned_density_end_to_end():
    results, density = verify.suite_learned()
    _report(12, results)


@pytest.mark.skipif(
    not os.environ.get("ELM_LONG_TESTS"),
    reason="long-running double-slit study; set ELM_LONG_TESTS=1 to include",
)
def test_criterion_13_double_slit():
    _report(13, verify.suite_slit())
