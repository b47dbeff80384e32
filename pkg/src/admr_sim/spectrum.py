"""Single-resonance power response and frequency-modulated lock-in spectra."""
from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bloch, cavity as cav
from .bloch import RateSet
from .cavity import CavityConfig
from .errors import EmptyGrid, ModelError, ParameterError, StepUnderflow

GAMMA_E = 28.024e9  # Hz/T
D_ZFS = 2.87e9  # Hz

CHANNELS = ("transmit", "reflect")


@dataclass(frozen=True)
class LockinConfig:
    """Lock-in/modulation settings.

    ``delta_mod=None`` selects half the coherence decay rate at the operating
    point.  ``mx_set=(0,)`` gives single-tone drive.
    """

    delta_mod: float | None = None
    a_par: float = 2.16
    ml_set: tuple = (-1, 0, 1)
    mx_set: tuple = (-1, 0, 1)
    gain_v0: float = 65e6
    channel: str = "transmit"

    def __post_init__(self):
        object.__setattr__(self, "ml_set", tuple(self.ml_set))
        object.__setattr__(self, "mx_set", tuple(self.mx_set))
        if self.delta_mod is not None and self.delta_mod < 0:
            raise ParameterError("delta_mod must be >= 0")
        if not self.a_par > 0:
            raise ParameterError("a_par must be > 0")
        for name in ("ml_set", "mx_set"):
            s = getattr(self, name)
            if not s or sorted(s) != sorted(-x for x in s):
                raise ParameterError(f"{name} must be non-empty and symmetric about 0")
        if self.channel not in CHANNELS:
            raise ParameterError(f"channel must be one of {CHANNELS}")

    def shift_counts(self) -> dict[int, int]:
        """Multiplicity of each combined index m_l + m_x."""
        return dict(Counter(ml + mx for ml in self.ml_set for mx in self.mx_set))


@dataclass
class SpectrumResult:
    detunings: np.ndarray  # MHz
    signal: np.ndarray  # V
    metadata: dict = field(default_factory=dict)


def resonance_power(delta, cavity: CavityConfig, rates: RateSet, omega, p_in, channel="transmit",
                    gamma_p=None):
    """Cavity output power (W) versus MW detuning for one spin resonance.

    The pump rate is frozen at its no-MW value unless given explicitly.
    """
    if gamma_p is None:
        gamma_p = cav.frozen_pump_rate(p_in, cavity)
    rho_g = bloch.ground_population(rates, omega, gamma_p, delta)
    alpha = cav.propagation_loss(cavity.sample, rho_g)
    return cav.cavity_power(p_in, cavity.mirrors, alpha, channel)


def off_resonance_power(cavity: CavityConfig, rates: RateSet, p_in, channel="transmit",
                        gamma_p=None):
    """Limit of resonance_power for infinite detuning (equivalently no MW)."""
    return resonance_power(0.0, cavity, rates, 0.0, p_in, channel, gamma_p)


def operating_point(cavity: CavityConfig, rates: RateSet, p_in, cfg: LockinConfig):
    """Frozen pump rate, coherence decay rate and modulation depth (all MHz)."""
    gamma_p = cav.frozen_pump_rate(p_in, cavity)
    gamma2 = float(rates.transverse_decay(gamma_p))
    delta_mod = gamma2 / 2 if cfg.delta_mod is None else cfg.delta_mod
    return gamma_p, gamma2, delta_mod


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise EmptyGrid("detuning grid is empty")
    if grid.size > 1:
        step = np.diff(grid)
        if np.any(step <= 0):
            raise ParameterError("detuning grid must be strictly increasing")
        if not np.allclose(step, step[0], rtol=1e-9, atol=0):
            raise ParameterError("detuning grid must be uniform")
    return grid


def _lockin_raw(delta, cavity, rates, omega, p_in, cfg, gamma_p, delta_mod):
    """Hyperfine- and tone-summed P(D + d + kA) - P(D - d + kA), in watts.

    Terms with opposite k are summed in pairs so the result is exactly odd
    in the detuning when the tone sets are symmetric.
    """
    delta = np.asarray(delta, dtype=float)

    def term(k):
        shift = k * cfg.a_par
        up = resonance_power(delta + delta_mod + shift, cavity, rates, omega, p_in,
                             cfg.channel, gamma_p)
        down = resonance_power(delta - delta_mod + shift, cavity, rates, omega, p_in,
                               cfg.channel, gamma_p)
        return up - down

    counts = cfg.shift_counts()
    total = np.zeros_like(delta)
    if 0 in counts:
        total = total + counts[0] * term(0)
    for k in sorted(k for k in counts if k > 0):
        total = total + counts[k] * (term(k) + term(-k))
    return total


def lockin_spectrum(grid, cavity: CavityConfig, rates: RateSet, omega, p_in,
                    cfg: LockinConfig = LockinConfig()) -> SpectrumResult:
    """Frequency-modulated, hyperfine-summed lock-in signal in volts.

    Powers are normalized to the off-resonant output before scaling by
    G*V0, so V0 is the off-resonant detector voltage.
    """
    grid = _check_grid(grid)
    gamma_p, gamma2, delta_mod = operating_point(cavity, rates, p_in, cfg)
    p_off = off_resonance_power(cavity, rates, p_in, cfg.channel, gamma_p)
    if not p_off > 0:
        raise ModelError("off-resonant power is zero; cannot normalize lock-in signal")
    raw = _lockin_raw(grid, cavity, rates, omega, p_in, cfg, gamma_p, delta_mod)
    signal = 0.5 * cfg.gain_v0 * raw / p_off
    if not np.all(np.isfinite(signal)):
        raise ModelError("non-finite lock-in signal")
    meta = {
        "omega_mhz": float(omega),
        "p_in_w": float(p_in),
        "gamma_p_mhz": float(gamma_p),
        "gamma2_mhz": gamma2,
        "delta_mod_mhz": float(delta_mod),
        "p_off_w": float(p_off),
        "lockin": asdict(cfg),
        "rates": rates.as_dict(),
        "mirrors": asdict(cavity.mirrors),
        "sample": asdict(cavity.sample),
    }
    return SpectrumResult(grid, signal, meta)


def slope_at_resonance(cavity: CavityConfig, rates: RateSet, omega, p_in,
                       cfg: LockinConfig = LockinConfig()) -> float:
    """dS/df at zero detuning in V/Hz, by central difference."""
    gamma_p, gamma2, delta_mod = operating_point(cavity, rates, p_in, cfg)
    h = min(delta_mod, gamma2) / 50.0
    if not h > 0:
        raise StepUnderflow(f"finite-difference step underflowed (delta_mod={delta_mod!r})")
    p_off = off_resonance_power(cavity, rates, p_in, cfg.channel, gamma_p)
    if not p_off > 0:
        raise ModelError("off-resonant power is zero; cannot normalize lock-in signal")
    s = _lockin_raw(np.array([h, -h]), cavity, rates, omega, p_in, cfg, gamma_p, delta_mod)
    ds = 0.5 * cfg.gain_v0 * (s[0] - s[1]) / p_off
    return float(ds / (2 * h) / 1e6)


def slope_map(p_in_values, omega_values, cavity: CavityConfig, rates: RateSet,
              cfg: LockinConfig = LockinConfig(), threads: int = 1) -> np.ndarray:
    """Slope at resonance on a (P_in, Omega) grid; rows follow ``p_in_values``."""
    points = [(p, o) for p in p_in_values for o in omega_values]

    def one(po):
        return slope_at_resonance(cavity, rates, po[1], po[0], cfg)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            flat = list(pool.map(one, points))
    else:
        flat = [one(po) for po in points]
    return np.array(flat).reshape(len(p_in_values), len(omega_values))


def overlay_spectrum(grid, cavity, rates, omega, p_in, cfg=LockinConfig(), lines=((0.0, 1.0),)):
    """Sum of weighted copies of the lock-in spectrum centred at the given offsets (MHz).

    Approximates additional orientation classes; each line uses the same
    single-class model.
    """
    grid = _check_grid(grid)
    total = np.zeros_like(grid)
    meta = None
    for offset, weight in lines:
        res = lockin_spectrum(grid - offset, cavity, rates, omega, p_in, cfg)
        total += weight * res.signal
        meta = res.metadata
    meta = dict(meta, lines=[list(map(float, ln)) for ln in lines])
    return SpectrumResult(grid, total, meta)


def zeeman_resonances(b_nv, gamma_e: float = GAMMA_E, d_zfs: float = D_ZFS):
    """(f_minus, f_plus) in Hz for a field projection ``b_nv`` in tesla."""
    if not gamma_e > 0:
        raise ParameterError("gamma_e must be > 0")
    return d_zfs - gamma_e * b_nv, d_zfs + gamma_e * b_nv
