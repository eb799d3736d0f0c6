"""Random-state generators shared by the test modules."""
import numpy as np

from suddenbirth.core import DensityMatrix, DickeBlock, product_to_dicke


def random_density(rng, rank=4):
    """Random full two-qubit density matrix of the given rank (Ginibre construction)."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_block_matrix(rng):
    """Random matrix of the block form: populations plus the |2>,|3> coherence."""
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    inner = g @ g.conj().T
    outer = rng.exponential(size=2)
    # occasionally drop the doubly excited or ground population entirely
    if rng.random() < 0.1:
        outer[rng.integers(2)] = 0.0
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0], m[3, 3] = outer
    m[1:3, 1:3] = inner
    return m / np.trace(m).real


def random_block_state(rng):
    return DensityMatrix(random_block_matrix(rng))


def random_block(rng) -> DickeBlock:
    return product_to_dicke(random_block_state(rng))


def partial_traces(m):
    """Reduced states of atom 1 and atom 2 for the |gg>,|eg>,|ge>,|ee> ordering."""
    # reorder to kron(atom1, atom2) with |g>=0, |e>=1
    perm = [0, 2, 1, 3]
    t = m[np.ix_(perm, perm)].reshape(2, 2, 2, 2)
    return np.einsum("ijkj->ik", t), np.einsum("ijil->jl", t), m[np.ix_(perm, perm)]
