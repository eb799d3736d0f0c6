import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from suddenbirth.core import DensityMatrix, DickeBlock, product_to_dicke
from suddenbirth.entanglement import (
    SPIN_FLIP,
    c_tilde_dicke_arrays,
    concurrence_dicke,
    concurrence_general,
    concurrence_x,
    spin_flip,
    threshold_factor,
    wootters_c_tilde,
)
from suddenbirth.errors import ValidationError

from helpers import random_block_matrix, random_density


def brute_force_concurrence(m):
    """Square roots of the (non-Hermitian) eigenvalues of rho rho_tilde, straight from the definition."""
    y = np.array([[0, -1j], [1j, 0]])
    yy = np.kron(y, y)
    ev = np.linalg.eigvals(m @ yy @ m.conj() @ yy)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def werner(p):
    bell = np.array([0, 1, 1, 0]) / math.sqrt(2)
    return p * np.outer(bell, bell) + (1 - p) * np.eye(4) / 4


class TestGeneral:
    def test_bell_state(self):
        assert concurrence_general(DensityMatrix.from_ket([1, 0, 0, 1])) == pytest.approx(1, abs=1e-12)

    def test_maximally_mixed(self):
        assert concurrence_general(DensityMatrix(np.eye(4) / 4)) == 0.0

    @pytest.mark.parametrize("p", [0.2, 1 / 3, 0.5, 0.75, 1.0])
    def test_werner(self, p):
        c = concurrence_general(DensityMatrix(werner(p)))
        assert c == pytest.approx(brute_force_concurrence(werner(p)), abs=1e-12)
        assert c == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-12)

    def test_werner_half(self):
        assert concurrence_general(DensityMatrix(werner(0.5))) == pytest.approx(0.25, abs=1e-12)

    def test_matches_brute_force_on_random_states(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            rho = random_density(rng, rank=int(rng.integers(1, 5)))
            assert abs(concurrence_general(rho) - brute_force_concurrence(rho.matrix)) < 1e-7

    def test_product_pure_state_is_exactly_separable(self):
        a = np.array([0.6, 0.8j])
        b = np.array([1, 1j]) / math.sqrt(2)
        psi = np.kron(a, b)[[0, 2, 1, 3]]
        assert abs(wootters_c_tilde(DensityMatrix.from_ket(psi))) < 1e-14

    def test_spin_flip_definition(self):
        m = random_density(np.random.default_rng(12)).matrix
        assert np.allclose(spin_flip(m), SPIN_FLIP @ m.conj() @ SPIN_FLIP)

    def test_rejects_non_positive(self):
        with pytest.raises(ValidationError):
            concurrence_general(np.diag([1.1, -0.1, 0, 0]))

    def test_range_on_random_states(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            c = concurrence_general(random_density(rng, rank=int(rng.integers(1, 5))))
            assert 0.0 <= c <= 1.0

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(14)
        perm = [0, 2, 1, 3]  # product ordering of this package vs kron(atom1, atom2)
        for i in range(100):
            rho = random_density(rng, rank=int(rng.integers(1, 5))).matrix
            u = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
            u = u[np.ix_(perm, perm)]
            rotated = u @ rho @ u.conj().T
            assert abs(concurrence_general(DensityMatrix(rotated)) - concurrence_general(DensityMatrix(rho))) < 1e-10


class TestClosedForms:
    def test_x_form_examples(self):
        c, ct = concurrence_x(0.25, 0.25, 0.25, 0.25, 0.25)
        assert c == 0.0 and ct == pytest.approx(0.0, abs=1e-15)
        c, ct = concurrence_x(0, 0.5, 0.5, 0, 0.5)
        assert c == pytest.approx(1.0)
        c, ct = concurrence_x(0.5, 0, 0, 0.5, 0)
        assert ct == pytest.approx(-1.0)

    def test_x_form_rejects_negative_population(self):
        with pytest.raises(ValidationError):
            concurrence_x(-1e-9, 0.5, 0.5, 1e-9, 0)

    def test_x_form_rejects_bad_sum(self):
        with pytest.raises(ValidationError):
            concurrence_x(0.5, 0.5, 0.5, 0, 0)

    def test_dicke_form_examples(self):
        assert concurrence_dicke(DickeBlock(rho44=0, rho_ss=1, rho_aa=0))[0] == pytest.approx(1)
        assert concurrence_dicke(DickeBlock(rho44=0, rho_ss=0, rho_aa=1))[0] == pytest.approx(1)
        # atom1 excited: rho_ss = rho_aa = rho_sa = 1/2 is separable
        assert concurrence_dicke(DickeBlock(rho44=0, rho_ss=0.5, rho_aa=0.5, rho_sa=0.5))[0] == pytest.approx(0, abs=1e-15)

    def test_threshold_logic(self):
        # entangled exactly when the coherence term beats 2 sqrt(rho11 rho44)
        rng = np.random.default_rng(15)
        for _ in range(2000):
            m = random_block_matrix(rng)
            c, ct = concurrence_x(*(m[i, i].real for i in range(4)), m[1, 2])
            thr = threshold_factor(m[0, 0].real, m[3, 3].real)
            assert (c > 0) == (2 * abs(m[1, 2]) > thr)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(16)
        blocks = [product_to_dicke(DensityMatrix(random_block_matrix(rng))) for _ in range(200)]
        cols = [np.array([getattr(b, f) for b in blocks]) for f in ("rho44", "rho_ss", "rho_aa", "rho_sa", "rho11")]
        vec = c_tilde_dicke_arrays(*cols)
        assert np.allclose(vec, [concurrence_dicke(b)[1] for b in blocks], atol=1e-15, rtol=0)


def test_triple_equivalence_on_block_states():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(2000):
        m = random_block_matrix(rng)
        g = concurrence_general(DensityMatrix(m))
        x = concurrence_x(*(m[i, i].real for i in range(4)), m[1, 2])[0]
        d = concurrence_dicke(product_to_dicke(DensityMatrix(m)))[0]
        worst = max(worst, abs(g - x), abs(g - d), abs(x - d))
    assert worst < 1e-10


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_block_concurrence_in_unit_interval(a, b, c, d, mag, phase):
    total = a + b + c + d
    if total < 1e-6:
        return
    r11, r22, r33, r44 = a / total, b / total, c / total, d / total
    r23 = mag * math.sqrt(r22 * r33) * complex(math.cos(phase), math.sin(phase))
    conc, ct = concurrence_x(r11, r22, r33, r44, r23)
    assert 0.0 <= conc <= 1.0 + 1e-15
    assert ct <= 1.0 + 1e-15
