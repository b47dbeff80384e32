"""Diamond-loaded Fabry-Perot cavity on resonance.

Loss ``alpha`` is dimensionless per round trip.  Coefficients quoted per mm
are multiplied by the round-trip path length in the diamond before use.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NegativeConcentration, ParameterError, UnityRoundTrip

# carbon atom number density of diamond, mm^-3
N_CARBON = 1.76e20


@dataclass(frozen=True)
class MirrorPair:
    r1: float = 0.948
    r2: float = 0.998

    def __post_init__(self):
        if not 0 < self.r1 < 1:
            raise ParameterError(f"r1 must lie in (0, 1), got {self.r1!r}")
        if not 0 < self.r2 <= 1:
            raise ParameterError(f"r2 must lie in (0, 1], got {self.r2!r}")

    @property
    def t1(self) -> float:
        return 1.0 - self.r1

    @property
    def t2(self) -> float:
        return 1.0 - self.r2


@dataclass(frozen=True)
class DiamondSample:
    """NV-doped diamond inside the cavity.

    ``epsilon`` converts intra-cavity power to optical pump rate, in kHz/W.
    """

    nv_ppb: float = 0.16
    sigma_nv: float = 3.1e-15  # mm^2
    path_length: float = 2 * 1.3  # mm, round trip
    alpha0_abs: float = 0.0781
    alpha_r: float = 0.006
    epsilon: float = 75.0  # kHz/W
    n_carbon: float = N_CARBON

    def __post_init__(self):
        if self.nv_ppb < 0:
            raise NegativeConcentration(f"nv_ppb must be >= 0, got {self.nv_ppb!r}")
        for name in ("sigma_nv", "alpha0_abs", "alpha_r", "epsilon", "n_carbon"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")
        if not self.path_length > 0:
            raise ParameterError("path_length must be > 0")

    @property
    def nv_density(self) -> float:
        return ppb_to_density(self.nv_ppb, self.n_carbon)

    @property
    def nv_loss(self) -> float:
        """Round-trip NV absorption with the whole ensemble in the ground state."""
        return self.nv_density * self.sigma_nv * self.path_length

    def with_nv(self, nv_ppb: float, nv_balanced: bool = False) -> "DiamondSample":
        """Copy at a new concentration; ``nv_balanced`` sets alpha0_abs to the NV loss."""
        s = replace(self, nv_ppb=nv_ppb)
        if nv_balanced:
            s = replace(s, alpha0_abs=s.nv_loss)
        return s


@dataclass(frozen=True)
class CavityConfig:
    mirrors: MirrorPair = MirrorPair()
    sample: DiamondSample = DiamondSample()


def ppb_to_density(ppb, n_carbon: float = N_CARBON):
    """Concentration in ppb to number density in mm^-3."""
    if np.any(np.asarray(ppb) < 0):
        raise NegativeConcentration(f"concentration must be >= 0, got {ppb!r}")
    return ppb * 1e-9 * n_carbon


def propagation_loss(sample: DiamondSample, rho_g):
    """Round-trip loss for a given optical ground-state population."""
    rho_g = np.asarray(rho_g, dtype=float)
    if np.any(rho_g < 0) or np.any(rho_g > 1):
        raise ParameterError("rho_g must lie in [0, 1]")
    out = sample.alpha0_abs + sample.nv_loss * rho_g + sample.alpha_r
    return float(out) if out.ndim == 0 else out


def round_trip_factor(mirrors: MirrorPair, alpha):
    """Amplitude round-trip product sqrt(R1 R2 exp(-alpha))."""
    rho = np.sqrt(mirrors.r1 * mirrors.r2 * np.exp(-np.asarray(alpha, dtype=float)))
    if np.any(rho >= 1):
        raise UnityRoundTrip("round-trip factor reached 1 (lossless cavity)")
    return rho


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def finesse(mirrors: MirrorPair, alpha):
    rho = round_trip_factor(mirrors, alpha)
    return _scalar(np.pi * np.sqrt(rho) / (1.0 - rho))


def _buildup(mirrors, alpha):
    return 1.0 / (1.0 - round_trip_factor(mirrors, alpha)) ** 2


def intracavity_power(p_in, mirrors: MirrorPair, alpha):
    if np.any(np.asarray(p_in) < 0):
        raise ParameterError("p_in must be >= 0")
    return _scalar(p_in * mirrors.t1 * _buildup(mirrors, alpha))


def transmitted_power(p_in, mirrors: MirrorPair, alpha):
    if np.any(np.asarray(p_in) < 0):
        raise ParameterError("p_in must be >= 0")
    alpha = np.asarray(alpha, dtype=float)
    return _scalar(p_in * mirrors.t1 * mirrors.t2 * np.exp(-alpha) * _buildup(mirrors, alpha))


def reflected_power(p_in, mirrors: MirrorPair, alpha):
    if np.any(np.asarray(p_in) < 0):
        raise ParameterError("p_in must be >= 0")
    rho = round_trip_factor(mirrors, alpha)
    return _scalar(p_in * (mirrors.r1 - rho) ** 2 / (mirrors.r1 * (1.0 - rho) ** 2))


def cavity_power(p_in, mirrors: MirrorPair, alpha, channel: str):
    if channel == "transmit":
        return transmitted_power(p_in, mirrors, alpha)
    if channel == "reflect":
        return reflected_power(p_in, mirrors, alpha)
    raise ParameterError(f"channel must be 'transmit' or 'reflect', got {channel!r}")


def pump_rate(p_cav, sample: DiamondSample):
    """Optical excitation rate in MHz for an intra-cavity power in W."""
    if np.any(np.asarray(p_cav) < 0):
        raise ParameterError("p_cav must be >= 0")
    return _scalar(sample.epsilon * 1e-3 * np.asarray(p_cav, dtype=float))


def frozen_pump_rate(p_in, cavity: CavityConfig):
    """Pump rate evaluated once with no MW field and the full ground population.

    The rate is then held fixed while the MW detuning is swept.
    """
    alpha = propagation_loss(cavity.sample, 1.0)
    return pump_rate(intracavity_power(p_in, cavity.mirrors, alpha), cavity.sample)
