"""Model parameters for the multi-connected Jaynes-Cummings lattice.

A ring of M microwave resonators, each coupled to the *two* qubits that sit
at its ends: qubit i couples to resonator i with strength g_r and to
resonator i-1 (periodic) with strength g_l.  All frequencies are stored as
ordinary frequencies nu = omega/2pi in MHz.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


class ParameterError(ValueError):
    """Raised when lattice parameters are unphysical or inconsistent."""


@dataclass(frozen=True)
class LatticeParams:
    """Physical parameters of one lattice instance.

    Attributes
    ----------
    M:
        Number of resonator/qubit cells on the ring (M >= 1).
    omega_c:
        Bare resonator frequency in MHz.
    delta:
        Qubit-resonator detuning in MHz; the qubit splitting is
        omega_z = omega_c - delta.
    g_l, g_r:
        Coupling of qubit i to resonator i-1 (left) and i (right), MHz.
    """

    M: int
    omega_c: float = 10_000.0
    delta: float = 0.0
    g_l: float = 150.0
    g_r: float = 150.0

    @property
    def omega_z(self) -> float:
        return self.omega_c - self.delta

    @property
    def g_sum(self) -> float:
        return self.g_l + self.g_r

    @property
    def self_coupled(self) -> bool:
        """True when both couplings act on the same resonator (M == 1)."""
        return self.M == 1


def validate(params: LatticeParams) -> LatticeParams:
    """Check params and return them unchanged; raise ParameterError otherwise.

    Couplings must be non-negative and the qubit splitting positive, so the
    empty lattice is the actual vacuum of every cell.
    """
    if int(params.M) != params.M or params.M < 1:
        raise ParameterError(f"M must be a positive integer, got {params.M!r}")
    if params.g_l < 0.0 or params.g_r < 0.0:
        raise ParameterError(
            f"couplings must be non-negative, got g_l={params.g_l}, g_r={params.g_r}"
        )
    if params.omega_c <= 0.0:
        raise ParameterError(f"omega_c must be positive, got {params.omega_c}")
    if params.omega_z <= 0.0:
        raise ParameterError(
            f"qubit splitting omega_z = omega_c - delta = {params.omega_z} "
            "must be positive"
        )
    return params


def swap_couplings(params: LatticeParams) -> LatticeParams:
    """Exchange g_l and g_r.

    On the ring this is a relabeling of sites (mirror), so every eigenvalue
    and every site-averaged observable is invariant under it.
    """
    return replace(params, g_l=params.g_r, g_r=params.g_l)
