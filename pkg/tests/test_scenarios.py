import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suddenbirth.core import CollectiveParams, DensityMatrix, PhysicalConfig, product_to_dicke
from suddenbirth.dynamics import evolve_analytic
from suddenbirth.entanglement import concurrence_dicke, concurrence_general
from suddenbirth.errors import ValidationError
from suddenbirth.scenarios import (
    INITIAL_STATES,
    SingleExcitation,
    build_initial_state,
    initial_pi,
    initial_pi_half,
    initial_single_excitation,
)

from helpers import partial_traces


def expected_pi_half_block(cfg):
    phi = 2 * math.pi * cfg.separation_over_lambda * math.cos(math.radians(cfg.theta_deg))
    return 0.25, (1 + math.cos(phi)) / 4, (1 - math.cos(phi)) / 4, 0.25j * math.sin(phi)


class TestPiHalf:
    def test_perpendicular_excitation(self):
        b = product_to_dicke(initial_pi_half(PhysicalConfig(0.25, theta_deg=90)))
        assert (b.rho44, b.rho_ss, b.rho_aa) == pytest.approx((0.25, 0.5, 0.0), abs=1e-15)
        assert abs(b.rho_sa) < 1e-15

    def test_axial_excitation_quarter_wavelength(self):
        b = product_to_dicke(initial_pi_half(PhysicalConfig(0.25)))
        assert (b.rho44, b.rho_ss, b.rho_aa) == pytest.approx((0.25, 0.25, 0.25), abs=1e-15)
        assert b.rho_sa == pytest.approx(0.25j, abs=1e-15)

    def test_block_entries_for_random_configs(self):
        rng = np.random.default_rng(31)
        for _ in range(1000):
            cfg = PhysicalConfig(float(rng.uniform(1e-3, 5)), theta_deg=float(rng.uniform(0, 90)))
            b = product_to_dicke(initial_pi_half(cfg))
            r44, ss, aa, sa = expected_pi_half_block(cfg)
            assert abs(b.rho44 - r44) < 1e-14
            assert abs(b.rho_ss - ss) < 1e-14
            assert abs(b.rho_aa - aa) < 1e-14
            assert abs(b.rho_sa - sa) < 1e-14

    def test_product_state(self):
        m = initial_pi_half(PhysicalConfig(0.4, theta_deg=33)).matrix
        a, b, full = partial_traces(m)
        assert np.max(np.abs(np.kron(a, b) - full)) < 1e-15
        assert np.allclose(np.diag(a), 0.5) and np.allclose(np.diag(b), 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 10), st.floats(0, 90))
def test_pi_half_is_separable(sep, theta):
    rho = initial_pi_half(PhysicalConfig(sep, theta_deg=theta))
    assert concurrence_general(rho) < 1e-13
    assert concurrence_dicke(product_to_dicke(rho))[0] < 1e-13


def test_pi_pulse():
    rho = initial_pi()
    assert rho.entry(4, 4) == 1.0
    assert np.count_nonzero(rho.matrix) == 1


@pytest.mark.parametrize("which, ket", [("atom1", [0, 1, 0, 0]), ("atom2", [0, 0, 1, 0])])
def test_single_atom_excitation(which, ket):
    rho = initial_single_excitation(which)
    assert np.array_equal(rho.matrix, DensityMatrix.from_ket(ket).matrix)
    assert concurrence_general(rho) == 0.0


@pytest.mark.parametrize("which, pop", [(SingleExcitation.SYMMETRIC, "rho_ss"), (SingleExcitation.ANTISYMMETRIC, "rho_aa")])
def test_collective_single_excitation(which, pop):
    b = product_to_dicke(initial_single_excitation(which))
    assert getattr(b, pop) == pytest.approx(1.0, abs=1e-15)
    # these two are Bell states, not pulse-prepared product states
    assert concurrence_dicke(b)[0] == pytest.approx(1.0, abs=1e-15)


def test_antisymmetric_with_full_cooperation_is_stationary():
    b0 = product_to_dicke(initial_single_excitation("antisymmetric"))
    for t in (1.0, 10.0, 100.0):
        b = evolve_analytic(b0, CollectiveParams(gamma12=1.0, omega12=0.0), t)
        assert b.rho_aa == pytest.approx(1.0, abs=1e-15)


def test_atom1_trapping_limit():
    b0 = product_to_dicke(initial_single_excitation("atom1"))
    b = evolve_analytic(b0, CollectiveParams(gamma12=1.0, omega12=0.0), 60.0)
    assert concurrence_dicke(b)[0] == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("name", ["pi-half", "pi", "atom1", "atom2"])
def test_pulse_scenarios_are_valid_and_separable(name):
    rng = np.random.default_rng(32)
    for _ in range(50):
        cfg = PhysicalConfig(float(rng.uniform(0.01, 3)), theta_deg=float(rng.uniform(0, 90)))
        rho = build_initial_state(name, cfg)
        DensityMatrix(rho.matrix)
        assert concurrence_general(rho) < 1e-13


def test_every_name_builds():
    for name in INITIAL_STATES:
        assert build_initial_state(name, PhysicalConfig(0.25)).trace == pytest.approx(1.0)


def test_unknown_name():
    with pytest.raises(ValidationError):
        build_initial_state("pi-quarter", PhysicalConfig(0.25))
