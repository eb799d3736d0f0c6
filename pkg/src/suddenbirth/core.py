"""
Domain types and basis transforms for two identical two-level emitters.

Basis conventions
-----------------
The product basis is ordered

    |1> = |g1 g2>,  |2> = |e1 g2>,  |3> = |g1 e2>,  |4> = |e1 e2>

and the one-excitation collective (Dicke) states are

    |s> = (|2> + |3>)/sqrt(2),   |a> = (|2> - |3>)/sqrt(2).

Matrix indices in code are zero-based, so rho[1, 2] is rho_23.

Units: the single-atom decay rate gamma sets the time unit. Every time in
the public API is measured in units of 1/gamma (gamma = 1 by default).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ValidationError

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_FLOOR = -1e-10
#: Slack allowed on the population range / closure checks of a DickeBlock.
BLOCK_TOL = 1e-12

#: Zero-based (row, col) pairs inside the block-diagonal form: the four
#: populations plus the one-photon coherences rho_23 and rho_32.
BLOCK_INDICES = ((0, 0), (1, 1), (2, 2), (3, 3), (1, 2), (2, 1))


class DipoleOrientation(str, enum.Enum):
    """Orientation of the (common) transition dipole relative to the interatomic axis."""

    PARALLEL = "parallel"
    PERPENDICULAR = "perpendicular"

    @property
    def alignment(self) -> float:
        """The projection mu_hat . r_hat used by the collective-rate formulas."""
        return 1.0 if self is DipoleOrientation.PARALLEL else 0.0


@dataclass(frozen=True)
class PhysicalConfig:
    """Geometry and single-atom decay rate of the emitter pair.

    Parameters
    ----------
    separation_over_lambda : float
        Interatomic distance in units of the resonant wavelength, r12/lambda > 0.
    dipole_orientation : DipoleOrientation
        Dipole direction relative to the interatomic axis.
    theta_deg : float
        Angle between the excitation wave vector and the interatomic axis, in
        degrees, within [0, 90].
    gamma : float
        Single-atom spontaneous emission rate. Defaults to 1 so that times are
        expressed in units of 1/gamma.
    """

    separation_over_lambda: float
    dipole_orientation: DipoleOrientation = DipoleOrientation.PARALLEL
    theta_deg: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dipole_orientation", DipoleOrientation(self.dipole_orientation))
        if not (math.isfinite(self.separation_over_lambda) and self.separation_over_lambda > 0):
            raise ValidationError(
                f"separation_over_lambda must be > 0, got {self.separation_over_lambda!r}"
            )
        if not (0.0 <= self.theta_deg <= 90.0):
            raise ValidationError(f"theta_deg must lie in [0, 90], got {self.theta_deg!r}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValidationError(f"gamma must be > 0, got {self.gamma!r}")

    @property
    def kr(self) -> float:
        """Dimensionless separation x = 2 pi r12 / lambda."""
        return 2.0 * math.pi * self.separation_over_lambda

    @property
    def excitation_phase(self) -> float:
        """Phase k . r12 imprinted by the excitation pulse, 2 pi (r12/lambda) cos(theta)."""
        return self.kr * math.cos(math.radians(self.theta_deg))


@dataclass(frozen=True)
class CollectiveParams:
    """Rates driving the collective dynamics.

    ``omega12_divergent`` is set (with ``omega12 = inf``) when the
    separation is so small that the dipole-dipole shift has no finite value;
    consumers that need Omega12 must then refuse the parameters.
    """

    gamma: float = 1.0
    gamma12: float = 0.0
    omega12: float = 0.0
    omega12_divergent: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValidationError(f"gamma must be > 0, got {self.gamma!r}")
        if not math.isfinite(self.gamma12) or abs(self.gamma12) > self.gamma * (1 + 1e-12):
            raise ValidationError(
                f"|gamma12| must not exceed gamma; got gamma12={self.gamma12!r}, gamma={self.gamma!r}"
            )
        if not self.omega12_divergent and not math.isfinite(self.omega12):
            raise ValidationError(f"omega12 must be finite, got {self.omega12!r}")

    def replace(self, **changes) -> "CollectiveParams":
        values = dict(
            gamma=self.gamma,
            gamma12=self.gamma12,
            omega12=self.omega12,
            omega12_divergent=self.omega12_divergent,
        )
        values.update(changes)
        if "omega12" in changes and math.isfinite(changes["omega12"]):
            values["omega12_divergent"] = False
        return CollectiveParams(**values)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Two-qubit density matrix in the product basis |1>..|4>.

    The constructor validates Hermiticity, unit trace and positivity; use
    :meth:`unchecked` for matrices whose checks were done elsewhere.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _readonly(self.matrix)
        object.__setattr__(self, "matrix", m)
        validate_density_matrix(m)

    @classmethod
    def unchecked(cls, matrix) -> "DensityMatrix":
        obj = object.__new__(cls)
        m = _readonly(matrix)
        if m.shape != (4, 4):
            raise ValidationError(f"expected a 4x4 matrix, got shape {m.shape}")
        object.__setattr__(obj, "matrix", m)
        return obj

    @classmethod
    def from_ket(cls, psi: Sequence[complex]) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        if psi.shape != (4,):
            raise ValidationError(f"expected a 4-component ket, got shape {psi.shape}")
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValidationError("zero ket")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    def __getitem__(self, index):
        return self.matrix[index]

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    __hash__ = None

    def entry(self, i: int, j: int) -> complex:
        """One-based access, ``entry(2, 3)`` is rho_23."""
        return complex(self.matrix[i - 1, j - 1])

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(hermitian_part(self.matrix))[0])

    def is_block_form(self, tol: float = 0.0) -> bool:
        """True when every entry outside the block-diagonal form has modulus <= tol."""
        return off_block_magnitude(self.matrix) <= tol

    def reduced_to_block(self) -> "DensityMatrix":
        """Copy with every coherence outside the block-diagonal form set to zero."""
        return DensityMatrix.unchecked(block_projection(self.matrix))


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def block_projection(m: np.ndarray) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    for i, j in BLOCK_INDICES:
        out[i, j] = m[i, j]
    return out


_OFF_BLOCK_MASK = np.ones((4, 4), dtype=bool)
for _i, _j in BLOCK_INDICES:
    _OFF_BLOCK_MASK[_i, _j] = False


def off_block_magnitude(m: np.ndarray) -> float:
    """Largest modulus among the entries that vanish in the block-diagonal form."""
    return float(np.max(np.abs(np.asarray(m)[_OFF_BLOCK_MASK])))


def validate_density_matrix(m: np.ndarray) -> None:
    if m.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("density matrix has non-finite entries")
    herm_err = float(np.max(np.abs(m - m.conj().T)))
    if herm_err > HERMITIAN_TOL:
        raise ValidationError(f"density matrix is not Hermitian (max |rho - rho^+| = {herm_err:.3e})")
    tr = np.trace(m)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValidationError(f"density matrix trace is {tr.real:.15g}, expected 1")
    lam_min = float(np.linalg.eigvalsh(hermitian_part(m))[0])
    if lam_min < EIGEN_FLOOR:
        raise ValidationError(f"density matrix is not positive (min eigenvalue {lam_min:.3e})")


@dataclass(frozen=True)
class DickeBlock:
    """Reduced state of the block-diagonal form in the collective basis.

    Holds the populations of |4>, |s>, |a>, |1> and the coherence
    rho_sa = <s|rho|a>. With ``rho11`` omitted it is fixed by closure.
    """

    rho44: float
    rho_ss: float
    rho_aa: float
    rho_sa: complex = 0j
    rho11: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        for name in ("rho44", "rho_ss", "rho_aa"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "rho_sa", complex(self.rho_sa))
        if self.rho11 is None:
            object.__setattr__(self, "rho11", 1.0 - self.rho44 - self.rho_ss - self.rho_aa)
        else:
            object.__setattr__(self, "rho11", float(self.rho11))
        values = (self.rho44, self.rho_ss, self.rho_aa, self.rho11)
        if not all(math.isfinite(v) for v in values) or not np.isfinite(self.rho_sa):
            raise ValidationError(f"non-finite DickeBlock entries: {self!r}")
        for name, v in zip(("rho44", "rho_ss", "rho_aa", "rho11"), values):
            if v < -BLOCK_TOL or v > 1 + BLOCK_TOL:
                raise ValidationError(f"{name}={v!r} outside [0, 1]")
        total = sum(values)
        if abs(total - 1.0) > BLOCK_TOL:
            raise ValidationError(f"DickeBlock populations sum to {total!r}, expected 1")
        if abs(self.rho_sa) ** 2 > self.rho_ss * self.rho_aa + BLOCK_TOL:
            raise ValidationError(
                f"|rho_sa|^2 = {abs(self.rho_sa) ** 2:.3e} exceeds rho_ss*rho_aa = "
                f"{self.rho_ss * self.rho_aa:.3e}"
            )

    @property
    def rho_as(self) -> complex:
        return self.rho_sa.conjugate()

    @property
    def threshold_factor(self) -> float:
        """The separability term 2 sqrt(rho11 rho44)."""
        return 2.0 * math.sqrt(max(self.rho11, 0.0) * max(self.rho44, 0.0))

    def as_tuple(self) -> tuple:
        return (self.rho44, self.rho_ss, self.rho_aa, self.rho_sa, self.rho11)


State = Union[DickeBlock, DensityMatrix]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time series of states and concurrence values.

    ``c_tilde`` holds the signed quantity whose positive part is the
    concurrence, so sign changes mark entanglement birth and death.
    """

    times: np.ndarray
    states: tuple
    concurrence: np.ndarray
    c_tilde: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        conc = np.asarray(self.concurrence, dtype=float)
        ct = np.asarray(self.c_tilde, dtype=float)
        states = tuple(self.states)
        n = len(times)
        if not (len(states) == n == len(conc) == len(ct)):
            raise ValidationError(
                f"trajectory series lengths differ: times={n}, states={len(states)}, "
                f"concurrence={len(conc)}, c_tilde={len(ct)}"
            )
        if n > 1 and not np.all(np.diff(times) > 0):
            raise ValidationError("trajectory times must be strictly increasing")
        for name, arr in (("times", times), ("concurrence", conc), ("c_tilde", ct)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "states", states)

    def __len__(self):
        return len(self.times)

    def blocks(self) -> list:
        """States as DickeBlocks (density matrices are projected onto the block form)."""
        return [s if isinstance(s, DickeBlock) else product_to_dicke(s, validate=False) for s in self.states]


def product_to_dicke(rho: DensityMatrix, validate: bool = True) -> DickeBlock:
    """Collective-basis view of the block entries of ``rho``.

    Entries outside the block-diagonal form are ignored.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(np.asarray(rho))
    elif validate:
        validate_density_matrix(rho.matrix)
    m = rho.matrix
    r22, r33, r23, r32 = m[1, 1], m[2, 2], m[1, 2], m[2, 1]
    return DickeBlock(
        rho44=float(m[3, 3].real),
        rho_ss=float(((r22 + r33 + r23 + r32) / 2).real),
        rho_aa=float(((r22 + r33 - r23 - r32) / 2).real),
        rho_sa=complex((r22 - r33 - r23 + r32) / 2),
        rho11=float(m[0, 0].real),
    )


def dicke_to_product(block: DickeBlock) -> DensityMatrix:
    """Block-diagonal density matrix with the populations and coherence of ``block``."""
    ss, aa, sa = block.rho_ss, block.rho_aa, block.rho_sa
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = block.rho11
    m[3, 3] = block.rho44
    m[1, 1] = (ss + aa + sa + sa.conjugate()).real / 2
    m[2, 2] = (ss + aa - sa - sa.conjugate()).real / 2
    m[1, 2] = (ss - aa - sa + sa.conjugate()) / 2
    m[2, 1] = np.conj(m[1, 2])
    return DensityMatrix.unchecked(m)


def one_photon_coherence(block: DickeBlock) -> complex:
    """rho_23 without building the full matrix."""
    return (block.rho_ss - block.rho_aa - block.rho_sa + block.rho_sa.conjugate()) / 2
