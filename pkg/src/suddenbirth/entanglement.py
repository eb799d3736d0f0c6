"""
Wootters concurrence in three equivalent forms.

``concurrence_general`` works for any two-qubit state. ``concurrence_x``
and ``concurrence_dicke`` are closed forms valid for the block-diagonal
form (populations plus rho_23), written in the product and the collective
basis respectively. The two closed forms also return the signed quantity
c_tilde whose positive part is the concurrence, which is what the
birth/death detector root-finds on.
"""
from __future__ import annotations

import math

import numpy as np

from .core import DensityMatrix, DickeBlock, validate_density_matrix
from .errors import NumericalError, ValidationError

#: Negative radicands / eigenvalues above -CLAMP_TOL are rounding noise and are clamped to zero.
CLAMP_TOL = 1e-12
#: Anything more negative than this is a genuine positivity violation.
POSITIVITY_TOL = 1e-8
#: Eigenvalues of rho at the level of eigensolver rounding (~50 ulp) are zeroed.
EIGEN_ZERO = 1e-14

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)


def spin_flip(m: np.ndarray) -> np.ndarray:
    """rho_tilde = (sigma_y x sigma_y) rho* (sigma_y x sigma_y)."""
    return SPIN_FLIP @ np.conj(m) @ SPIN_FLIP


def _clamped_sqrt(value: float, what: str) -> float:
    if value < 0:
        if value < -CLAMP_TOL:
            raise ValidationError(f"negative {what} {value:.3e}")
        return 0.0
    return math.sqrt(value)


def wootters_lambdas(rho) -> np.ndarray:
    """Square roots of the eigenvalues of rho rho_tilde, sorted descending.

    rho rho_tilde has the same spectrum as the Hermitian matrix
    sqrt(rho) rho_tilde sqrt(rho) = M M^+ with M = sqrt(rho) sqrt(rho_tilde),
    so the lambdas are the singular values of M. Taking singular values
    directly avoids square-rooting eigenvalues that are pure rounding noise.
    Eigenvalues of rho below EIGEN_ZERO are treated as exact zeros.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    h = 0.5 * (m + m.conj().T)
    try:
        w, v = np.linalg.eigh(h)
        if w[0] < -POSITIVITY_TOL:
            raise ValidationError(f"density matrix is not positive (min eigenvalue {w[0]:.3e})")
        w = np.where(w < EIGEN_ZERO, 0.0, w)
        root = (v * np.sqrt(w)) @ v.conj().T
        flipped_root = SPIN_FLIP @ np.conj(root) @ SPIN_FLIP
        lam = np.linalg.svd(root @ flipped_root, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solver failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise NumericalError("non-finite singular values in concurrence evaluation")
    return np.sort(lam)[::-1]


def wootters_c_tilde(rho) -> float:
    """Signed Wootters combination lambda1 - lambda2 - lambda3 - lambda4."""
    lam = wootters_lambdas(rho)
    return float(lam[0] - lam[1] - lam[2] - lam[3])


def concurrence_general(rho: DensityMatrix, validate: bool = True) -> float:
    """Wootters concurrence max(0, lambda1 - lambda2 - lambda3 - lambda4) of any two-qubit state."""
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(np.asarray(rho))
    elif validate:
        validate_density_matrix(rho.matrix)
    return min(1.0, max(0.0, wootters_c_tilde(rho)))


def concurrence_x(rho11: float, rho22: float, rho33: float, rho44: float, rho23: complex) -> tuple:
    """Concurrence of the block-diagonal form from its product-basis entries.

    Returns
    -------
    (c, c_tilde) : tuple of float
        c_tilde = 2|rho23| - 2 sqrt(rho11 rho44) and c = max(0, c_tilde).
    """
    for name, v in (("rho11", rho11), ("rho22", rho22), ("rho33", rho33), ("rho44", rho44)):
        if not math.isfinite(v):
            raise NumericalError(f"{name} is not finite")
        if v < -CLAMP_TOL:
            raise ValidationError(f"negative population {name}={v!r}")
    total = rho11 + rho22 + rho33 + rho44
    if abs(total - 1.0) > 1e-10:
        raise ValidationError(f"populations sum to {total!r}, expected 1")
    c_tilde = 2.0 * abs(rho23) - 2.0 * math.sqrt(max(rho11, 0.0) * max(rho44, 0.0))
    return max(0.0, c_tilde), c_tilde


def concurrence_dicke(block: DickeBlock) -> tuple:
    """Concurrence of the block-diagonal form from its collective-basis entries.

    c_tilde = sqrt((rho_ss - rho_aa)^2 - (rho_sa - rho_as)^2) - 2 sqrt(rho11 rho44),
    where (rho_sa - rho_as)^2 = -4 (Im rho_sa)^2.
    """
    diff = block.rho_sa - block.rho_as
    radicand = (block.rho_ss - block.rho_aa) ** 2 - (diff * diff).real
    coherence = _clamped_sqrt(radicand, "radicand")
    c_tilde = coherence - block.threshold_factor
    return max(0.0, c_tilde), c_tilde


def threshold_factor(rho11: float, rho44: float) -> float:
    return 2.0 * math.sqrt(max(rho11, 0.0) * max(rho44, 0.0))


def c_tilde_dicke_arrays(rho44, rho_ss, rho_aa, rho_sa, rho11) -> np.ndarray:
    """Vectorised c_tilde of the collective-basis closed form (clamps rounding noise)."""
    coherence = np.sqrt(np.clip((rho_ss - rho_aa) ** 2 + 4 * np.imag(rho_sa) ** 2, 0.0, None))
    return coherence - 2 * np.sqrt(np.clip(rho11, 0.0, None) * np.clip(rho44, 0.0, None))
