"""Shot-noise-limited sensitivity of an impedance-matched ADMR cavity."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants
from scipy.optimize import minimize_scalar

from . import bloch, cavity as cav
from .bloch import RateSet
from .cavity import CavityConfig, DiamondSample, MirrorPair
from .errors import AdmrError, NoConvergence, ParameterError, ZeroSlope
from .spectrum import GAMMA_E, resonance_power

AXES = ("nv_ppb", "p_in", "omega")

# points per unit Gamma_2 when scanning for the steepest detuning
_SCAN_DENSITY = 100


def shot_noise_asd(p_detected, wavelength_nm: float = 532.0):
    """Photon shot-noise amplitude spectral density sqrt(2 h nu P) in W/sqrt(Hz)."""
    p = np.asarray(p_detected, dtype=float)
    if np.any(p < 0):
        raise ParameterError("detected power must be >= 0")
    nu = constants.c / (wavelength_nm * 1e-9)
    out = np.sqrt(2.0 * constants.h * nu * p)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SensorDesign:
    """Everything except the swept coordinates ([NV], P_in, Omega).

    With ``nv_balanced`` the non-NV absorption equals the NV absorption at
    every concentration; with ``impedance_matched`` R1 is solved per point
    and ``r1`` is ignored.
    """

    r2: float = 0.999
    r1: float = 0.948
    sample: DiamondSample = DiamondSample(alpha0_abs=0.0)
    rates: RateSet = RateSet()
    nv_balanced: bool = True
    impedance_matched: bool = True
    gamma_e: float = GAMMA_E
    wavelength_nm: float = 532.0


@dataclass
class SensitivityPoint:
    nv_ppb: float
    p_in: float
    omega: float
    channel: str
    eta: float = math.nan  # T/sqrt(Hz)
    slope_w_per_hz: float = math.nan
    p_detected: float = math.nan
    finesse: float = math.nan
    p_cav: float = math.nan
    r1_matched: float = math.nan
    p_on: float = math.nan  # detected channel at zero detuning
    p_off: float = math.nan
    p_r_on: float = math.nan  # reflected power at zero detuning
    gamma_p: float = math.nan
    delta_steepest: float = math.nan  # MHz
    error: str | None = None

    @property
    def coords(self):
        return self.nv_ppb, self.p_in, self.omega


def impedance_match_r1(r2: float, sample: DiamondSample, rates: RateSet, p_in: float,
                       tol: float = 1e-10, max_iter: int = 10_000, damping: float = 0.5) -> float:
    """Input reflectivity with R1 = R2 exp(-alpha) at zero MW field.

    alpha depends on the ground population, which depends on the pump rate,
    which depends on R1 through the intra-cavity power: solved by damped
    fixed-point iteration.
    """
    if not 0 < r2 <= 1:
        raise ParameterError("r2 must lie in (0, 1]")
    alpha_full = cav.propagation_loss(sample, 1.0)
    r1 = r2 * math.exp(-alpha_full)
    for _ in range(max_iter):
        mirrors = MirrorPair(r1, r2)
        p_cav = cav.intracavity_power(p_in, mirrors, alpha_full)
        gamma_p = cav.pump_rate(p_cav, sample)
        rho_g = float(bloch.ground_population(rates, 0.0, gamma_p, 0.0))
        target = r2 * math.exp(-cav.propagation_loss(sample, rho_g))
        if abs(target - r1) < tol:
            return target
        r1 = r1 + damping * (target - r1)
    raise NoConvergence(f"impedance matching did not converge after {max_iter} iterations")


def _steepest(power, gamma2):
    """max |dP/dDelta| over 0 <= Delta <= 3 Gamma_2, using evenness of P."""
    span = 3.0 * gamma2
    h = gamma2 * 1e-4
    n = int(_SCAN_DENSITY * 3) + 1
    grid = np.linspace(0.0, span, n)
    d = np.abs(power(grid + h) - power(grid - h)) / (2 * h)
    i = int(np.argmax(d))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    if hi > lo:
        res = minimize_scalar(
            lambda x: -abs(float(power(np.array([x + h]))[0] - power(np.array([x - h]))[0])) / (2 * h),
            bounds=(lo, hi), method="bounded", options={"xatol": gamma2 * 1e-6})
        if -res.fun > d[i]:
            return -res.fun, float(res.x)
    return float(d[i]), float(grid[i])


def sensitivity(nv_ppb: float, p_in: float, omega: float, channel: str = "reflect",
                design: SensorDesign = SensorDesign()) -> SensitivityPoint:
    """Shot-noise-limited sensitivity for a single-peak ADMR line.

    eta = shot noise of the detected power / steepest |dP/df| / gamma_e.
    """
    if channel not in ("transmit", "reflect"):
        raise ParameterError(f"unknown channel {channel!r}")
    pt = SensitivityPoint(float(nv_ppb), float(p_in), float(omega), channel)
    sample = design.sample.with_nv(nv_ppb, design.nv_balanced)
    rates = design.rates
    if design.impedance_matched:
        r1 = impedance_match_r1(design.r2, sample, rates, p_in)
    else:
        r1 = design.r1
    cavity = CavityConfig(MirrorPair(r1, design.r2), sample)
    alpha_full = cav.propagation_loss(sample, 1.0)
    pt.r1_matched = r1
    pt.p_cav = cav.intracavity_power(p_in, cavity.mirrors, alpha_full)
    pt.gamma_p = gamma_p = cav.pump_rate(pt.p_cav, sample)
    rho_g0 = float(bloch.ground_population(rates, 0.0, gamma_p, 0.0))
    pt.finesse = cav.finesse(cavity.mirrors, cav.propagation_loss(sample, rho_g0))

    def power(delta):
        return resonance_power(delta, cavity, rates, omega, p_in, channel, gamma_p)

    pt.p_off = float(resonance_power(0.0, cavity, rates, 0.0, p_in, channel, gamma_p))
    pt.p_on = float(power(0.0))
    pt.p_r_on = float(resonance_power(0.0, cavity, rates, omega, p_in, "reflect", gamma_p))
    pt.p_detected = pt.p_off if channel == "transmit" else max(pt.p_off, pt.p_on)
    if omega == 0:
        raise ZeroSlope("no MW drive: the ADMR slope vanishes")
    gamma2 = float(rates.transverse_decay(gamma_p))
    slope_per_mhz, pt.delta_steepest = _steepest(power, gamma2)
    pt.slope_w_per_hz = slope_per_mhz / 1e6
    if not pt.slope_w_per_hz > 0:
        raise ZeroSlope("ADMR slope vanishes")
    noise = shot_noise_asd(pt.p_detected, design.wavelength_nm)
    pt.eta = noise / pt.slope_w_per_hz / design.gamma_e
    return pt


def _safe_point(args):
    coords, channel, design = args
    try:
        return sensitivity(*coords, channel=channel, design=design)
    except AdmrError as exc:
        nv, p, om = coords
        return SensitivityPoint(nv, p, om, channel, error=f"{type(exc).__name__}: {exc}")


def _map_points(coords, channel, design, threads):
    jobs = [(c, channel, design) for c in coords]
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(_safe_point, jobs))
    return [_safe_point(j) for j in jobs]


def _check_axis(name, values):
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise ParameterError(f"axis {name} is empty")
    if np.any(v <= 0) and name != "omega":
        raise ParameterError(f"axis {name} must be positive")
    if np.any(v < 0):
        raise ParameterError(f"axis {name} must be non-negative")
    if np.any(np.diff(v) <= 0):
        raise ParameterError(f"axis {name} must be strictly increasing")
    return v


@dataclass
class SweepGrid:
    nv_ppb_values: np.ndarray
    p_in_values: np.ndarray
    omega_values: np.ndarray
    order: tuple = AXES

    def __post_init__(self):
        self.nv_ppb_values = _check_axis("nv_ppb", self.nv_ppb_values)
        self.p_in_values = _check_axis("p_in", self.p_in_values)
        self.omega_values = _check_axis("omega", self.omega_values)
        self.order = tuple(self.order)
        if sorted(self.order) != sorted(AXES):
            raise ParameterError(f"order must be a permutation of {AXES}")

    def axis(self, name):
        return {"nv_ppb": self.nv_ppb_values, "p_in": self.p_in_values,
                "omega": self.omega_values}[name]

    @property
    def fixed(self) -> tuple:
        """Axes held constant (a single value)."""
        return tuple(a for a in AXES if self.axis(a).size == 1)

    @property
    def shape(self):
        return tuple(self.axis(a).size for a in self.order)

    def coordinates(self):
        """(nv_ppb, p_in, omega) tuples in row-major order over ``order``."""
        for combo in itertools.product(*(self.axis(a) for a in self.order)):
            named = dict(zip(self.order, combo))
            yield tuple(float(named[a]) for a in AXES)


@dataclass
class SweepResult:
    grid: SweepGrid
    channel: str
    points: list = field(default_factory=list)

    def values(self, attr="eta") -> np.ndarray:
        return np.array([getattr(p, attr) for p in self.points]).reshape(self.grid.shape)

    def best(self) -> SensitivityPoint:
        ok = [p for p in self.points if p.error is None and np.isfinite(p.eta)]
        if not ok:
            raise ZeroSlope("no grid point has a finite sensitivity")
        return min(ok, key=lambda p: p.eta)

    @property
    def errors(self):
        return [(i, p.error) for i, p in enumerate(self.points) if p.error]


def sweep(grid: SweepGrid, channel: str = "reflect", design: SensorDesign = SensorDesign(),
          threads: int = 1) -> SweepResult:
    """Sensitivity at every grid point; failures are recorded, not raised."""
    points = _map_points(list(grid.coordinates()), channel, design, threads)
    return SweepResult(grid, channel, points)


def _refined_axis(values, best, factor):
    """Finer axis spanning the cells either side of ``best``."""
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        return values, True
    i = int(np.argmin(np.abs(values - best)))
    lo, hi = values[max(i - 1, 0)], values[min(i + 1, values.size - 1)]
    log = values[0] > 0 and values.size > 2 and np.allclose(
        np.diff(np.log(values)), np.log(values[1] / values[0]), rtol=1e-6)
    if log:
        step = np.log(values[1] / values[0]) / factor
        n_lo = int(round(np.log(best / lo) / step))
        n_hi = int(round(np.log(hi / best) / step))
        new = best * np.exp(step * np.arange(-n_lo, n_hi + 1))
    else:
        step = (values[1] - values[0]) / factor
        n_lo = int(round((best - lo) / step))
        n_hi = int(round((hi - best) / step))
        new = best + step * np.arange(-n_lo, n_hi + 1)
    return np.unique(new), log


def refine_minimum(objective, axes, rounds: int = 3, factor: int = 10, evaluate=None):
    """Coarse grid search followed by ``rounds`` of local refinement.

    ``objective`` maps a coordinate tuple to a value (nan = infeasible).
    Each round re-grids the neighbouring cells of the incumbent ``factor``
    times finer.  The incumbent is kept, so refinement never worsens it.
    Returns (best_coords, best_value, history) where history holds one
    (coords, value, axes) entry per stage.
    """
    if evaluate is None:
        def evaluate(coords):
            return [objective(c) for c in coords]
    axes = [np.asarray(a, dtype=float) for a in axes]
    best_c, best_v, history = None, math.inf, []
    for stage in range(rounds + 1):
        coords = list(itertools.product(*axes))
        vals = evaluate(coords)
        for c, v in zip(coords, vals):
            if v is not None and np.isfinite(v) and v < best_v:
                best_c, best_v = c, float(v)
        if best_c is None:
            raise ZeroSlope("objective is infeasible on the whole grid")
        history.append((best_c, best_v, [a.copy() for a in axes]))
        if stage < rounds:
            axes = [_refined_axis(a, b, factor)[0] for a, b in zip(axes, best_c)]
    return best_c, best_v, history


@dataclass
class OptimizeResult:
    best: SensitivityPoint
    coarse_best: SensitivityPoint
    history: list


def optimize(grid: SweepGrid, channel: str = "reflect", design: SensorDesign = SensorDesign(),
             rounds: int = 3, factor: int = 10, threads: int = 1) -> OptimizeResult:
    """Minimize eta: coarse sweep over ``grid``, then local refinement."""
    cache = {}

    def evaluate(coords):
        todo = [c for c in coords if c not in cache]
        for c, p in zip(todo, _map_points(todo, channel, design, threads)):
            cache[c] = p
        return [cache[c].eta if cache[c].error is None else math.nan for c in coords]

    axes = [grid.nv_ppb_values, grid.p_in_values, grid.omega_values]
    best_c, _, history = refine_minimum(None, axes, rounds, factor, evaluate)
    coarse_c = history[0][0]
    return OptimizeResult(cache[best_c], cache[coarse_c], history)


def with_rates(design: SensorDesign, rates: RateSet) -> SensorDesign:
    return replace(design, rates=rates)
