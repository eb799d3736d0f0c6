"""Separable initial states prepared by short excitation pulses."""
from __future__ import annotations

import cmath
import enum
import math
from typing import Optional

import numpy as np

from .core import DensityMatrix, PhysicalConfig
from .errors import ValidationError


class SingleExcitation(str, enum.Enum):
    ATOM1 = "atom1"
    ATOM2 = "atom2"
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


def initial_pi_half(config: PhysicalConfig) -> DensityMatrix:
    """Both atoms after a pi/2 pulse with wave vector at angle theta to the axis.

    Each atom is left in (|g> + i e^{i k.r_j} |e>)/sqrt(2). Atom 1 sits at
    the origin and atom 2 at r12, so the relative phase is k.r12. The
    one-excitation block then has rho_ss = (1 + cos kr)/4,
    rho_aa = (1 - cos kr)/4, rho_sa = (i/4) sin kr and rho44 = 1/4.
    """
    phase = config.excitation_phase
    atom1 = np.array([1.0, 1j]) / math.sqrt(2)
    atom2 = np.array([1.0, 1j * cmath.exp(1j * phase)]) / math.sqrt(2)
    # kron order (atom1, atom2) with |g>=0, |e>=1 gives |gg>, |ge>, |eg>, |ee>
    amp = np.kron(atom1, atom2)
    psi = np.array([amp[0], amp[2], amp[1], amp[3]])
    return DensityMatrix.from_ket(psi)


def initial_pi(config: Optional[PhysicalConfig] = None) -> DensityMatrix:
    """Both atoms inverted, |e1 e2>. Independent of geometry."""
    return DensityMatrix.from_ket([0, 0, 0, 1])


def initial_single_excitation(which) -> DensityMatrix:
    """One shared excitation: on atom 1, on atom 2, or in |s> / |a>."""
    which = SingleExcitation(which)
    s = 1 / math.sqrt(2)
    kets = {
        SingleExcitation.ATOM1: [0, 1, 0, 0],
        SingleExcitation.ATOM2: [0, 0, 1, 0],
        SingleExcitation.SYMMETRIC: [0, s, s, 0],
        SingleExcitation.ANTISYMMETRIC: [0, s, -s, 0],
    }
    return DensityMatrix.from_ket(kets[which])


#: Names accepted by :func:`build_initial_state` (and the CLI ``--init`` flag).
INITIAL_STATES = ("pi-half", "pi", "atom1", "atom2", "sym", "antisym")

_SHORT = {
    "atom1": SingleExcitation.ATOM1,
    "atom2": SingleExcitation.ATOM2,
    "sym": SingleExcitation.SYMMETRIC,
    "antisym": SingleExcitation.ANTISYMMETRIC,
}


def build_initial_state(name: str, config: PhysicalConfig) -> DensityMatrix:
    if name == "pi-half":
        return initial_pi_half(config)
    if name == "pi":
        return initial_pi(config)
    if name in _SHORT:
        return initial_single_excitation(_SHORT[name])
    raise ValidationError(f"unknown initial state {name!r}; expected one of {INITIAL_STATES}")
