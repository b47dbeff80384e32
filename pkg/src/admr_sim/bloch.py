"""Five-level NV rate/Bloch model and its steady state.

Levels: |1> ground m_s=0, |2> ground m_s=+-1, |3> excited m_s=0,
|4> excited m_s=+-1, |5> singlet shelving state.  The microwave field
drives |1> <-> |2> through the rotating-frame coherence c = rho_12.
All rates are in MHz (1/us), except ``gamma1`` which is in kHz.

State vector used throughout: (p1, p2, p3, p4, p5, Re c, Im c).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NonConvergence, ParameterError, SingularSystem

# Upper bound on the shelving decay rate: lifetime > 150 ns.
MAX_SHELVING_DECAY = 1.0 / 0.150  # MHz

CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class RateSet:
    """Decay and relaxation rates of the five-level model.

    Defaults are room-temperature averages from Robledo et al., NJP 13,
    025013 (2011): radiative 65.9 MHz, ISC 7.9 / 53.3 MHz, singlet decay
    0.98 MHz to m_s=0 and 0.73 MHz to each of m_s=+1, -1.  Level |2>
    lumps both m_s=+-1 sublevels, so ``k52`` carries twice the per-sublevel
    singlet rate.
    """

    k31: float = 65.9
    k42: float = 65.9
    k35: float = 7.9
    k45: float = 53.3
    k51: float = 0.98
    k52: float = 1.46
    gamma1: float = 0.182  # kHz
    gamma2_star: float = 1.0 / 3.0

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not np.isfinite(value) or value < 0:
                raise ParameterError(f"rate {name} must be finite and >= 0, got {value!r}")

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @property
    def gamma1_mhz(self) -> float:
        return self.gamma1 * 1e-3

    def physical_violations(self) -> list[str]:
        """Literature constraints that a sensible NV rate set satisfies.

        Not enforced on construction: symmetry checks and degenerate
        inputs deliberately break them.
        """
        out = []
        if not self.k45 > self.k35:
            out.append("k45 must exceed k35 (m_s=+-1 shelves preferentially)")
        if self.k51 + self.k52 > MAX_SHELVING_DECAY:
            out.append("k51 + k52 exceeds 1/(150 ns)")
        return out

    def mirrored(self) -> "RateSet":
        """Swap the m_s=0 and m_s=+-1 branches."""
        return replace(self, k31=self.k42, k42=self.k31, k35=self.k45,
                       k45=self.k35, k51=self.k52, k52=self.k51)

    def transverse_decay(self, gamma_p) -> float:
        """Total decay of the ground-state coherence, Gamma_2 (MHz)."""
        return self.gamma2_star + 0.5 * self.gamma1_mhz + 0.5 * np.asarray(gamma_p, dtype=float)


@dataclass(frozen=True)
class DrivePoint:
    omega: float  # Rabi frequency, MHz
    gamma_p: float  # optical excitation rate, MHz
    delta: float = 0.0  # MW detuning, MHz

    def __post_init__(self):
        if not (np.isfinite(self.omega) and np.isfinite(self.gamma_p) and np.isfinite(self.delta)):
            raise ParameterError("drive parameters must be finite")
        if self.omega < 0 or self.gamma_p < 0:
            raise ParameterError("omega and gamma_p must be >= 0")


@dataclass(frozen=True)
class SteadyState:
    rho11: float
    rho22: float
    rho33: float
    rho44: float
    rho55: float
    coherence: complex = 0j
    degenerate: bool = False
    rho_g: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rho_g", self.rho11 + self.rho22)

    @property
    def populations(self) -> np.ndarray:
        return np.array([self.rho11, self.rho22, self.rho33, self.rho44, self.rho55])

    @classmethod
    def from_vector(cls, v, degenerate=False) -> "SteadyState":
        p = [float(x) for x in v[:5]]
        return cls(*p, coherence=complex(v[5], v[6]), degenerate=degenerate)


def generator(rates: RateSet, omega, gamma_p, delta) -> np.ndarray:
    """Linear generator M with d/dt y = M y; broadcasts over the drive arguments.

    Returns an array of shape broadcast_shape + (7, 7).
    """
    omega, gamma_p, delta = np.broadcast_arrays(
        np.asarray(omega, float), np.asarray(gamma_p, float), np.asarray(delta, float))
    g1 = rates.gamma1_mhz
    g2 = rates.transverse_decay(gamma_p)
    M = np.zeros(omega.shape + (7, 7))
    M[..., 0, 0] = -gamma_p - g1
    M[..., 0, 1] = g1
    M[..., 0, 2] = rates.k31
    M[..., 0, 4] = rates.k51
    M[..., 0, 6] = -omega
    M[..., 1, 0] = g1
    M[..., 1, 1] = -gamma_p - g1
    M[..., 1, 3] = rates.k42
    M[..., 1, 4] = rates.k52
    M[..., 1, 6] = omega
    M[..., 2, 0] = gamma_p
    M[..., 2, 2] = -(rates.k31 + rates.k35)
    M[..., 3, 1] = gamma_p
    M[..., 3, 3] = -(rates.k42 + rates.k45)
    M[..., 4, 2] = rates.k35
    M[..., 4, 3] = rates.k45
    M[..., 4, 4] = -(rates.k51 + rates.k52)
    M[..., 5, 5] = -g2
    M[..., 5, 6] = -delta
    M[..., 6, 5] = delta
    M[..., 6, 6] = -g2
    M[..., 6, 0] = 0.5 * omega
    M[..., 6, 1] = -0.5 * omega
    return M


def _constrained(M):
    """Replace the p1 equation by the trace condition."""
    A = M.copy()
    A[..., 0, :] = 0.0
    A[..., 0, :5] = 1.0
    b = np.zeros(A.shape[:-1])
    b[..., 0] = 1.0
    return A, b


def _clamp(v):
    p = v[..., :5]
    if np.any(p < -CLAMP_TOL) or np.any(p > 1 + CLAMP_TOL):
        raise SingularSystem("steady state left the physical population range")
    v = v.copy()
    v[..., :5] = np.clip(p, 0.0, 1.0)
    return v


def solve_populations(rates: RateSet, omega, gamma_p, delta) -> np.ndarray:
    """Vectorized steady state; returns (..., 7) state vectors.

    The populations depend on delta only through delta**2, so the solve is
    done at |delta| and the sign is restored on Re c.  This makes every
    detuning response exactly even.
    """
    delta = np.asarray(delta, float)
    M = generator(rates, omega, gamma_p, np.abs(delta))
    A, b = _constrained(M)
    try:
        v = np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    if not np.all(np.isfinite(v)):
        raise SingularSystem("non-finite steady state")
    v[..., 5] *= np.where(np.broadcast_to(delta, v.shape[:-1]) < 0, -1.0, 1.0)
    return _clamp(v)


def ground_population(rates: RateSet, omega, gamma_p, delta):
    """rho_11 + rho_22 for arrays of drive parameters."""
    v = solve_populations(rates, omega, gamma_p, delta)
    return v[..., 0] + v[..., 1]


def steady_state(rates: RateSet, drive: DrivePoint) -> SteadyState:
    """Unique steady state of the five-level model at one drive point.

    A rank-deficient system with no optical excitation (nothing leaves the
    ground doublet, e.g. all rates and drives zero) falls back to the
    equal-population convention and is flagged ``degenerate``.
    """
    M = generator(rates, drive.omega, drive.gamma_p, drive.delta)
    A, _ = _constrained(M)
    if np.linalg.matrix_rank(A) < 7:
        if drive.gamma_p == 0:
            return SteadyState(0.5, 0.5, 0.0, 0.0, 0.0, degenerate=True)
        raise SingularSystem(f"steady-state system is rank deficient for {rates} at {drive}")
    v = solve_populations(rates, drive.omega, drive.gamma_p, drive.delta)
    return SteadyState.from_vector(v)


def effective_rate_steady_state(rates: RateSet, drive: DrivePoint) -> SteadyState:
    """Steady state with the coherence eliminated into a MW pumping rate.

    W = Omega^2 Gamma_2 / (2 (Gamma_2^2 + Delta^2)).  In steady state this is
    algebraically identical to the coherent model; kept as a cross-check.
    """
    g2 = float(rates.transverse_decay(drive.gamma_p))
    w = drive.omega ** 2 * g2 / (2.0 * (g2 ** 2 + drive.delta ** 2))
    M = generator(rates, 0.0, drive.gamma_p, 0.0)[:5, :5]
    M[0, 0] -= w
    M[0, 1] += w
    M[1, 1] -= w
    M[1, 0] += w
    M[0, :] = 1.0
    b = np.zeros(5)
    b[0] = 1.0
    p = np.linalg.solve(M, b)
    return SteadyState(*(float(x) for x in np.clip(p, 0.0, 1.0)))


def _rhs(t, y, rates: RateSet, drive: DrivePoint):
    # written out term by term, independently of generator()
    p1, p2, p3, p4, p5 = y[:5]
    c = complex(y[5], y[6])
    gp, om, de = drive.gamma_p, drive.omega, drive.delta
    g1 = rates.gamma1 * 1e-3
    g2 = rates.gamma2_star + g1 / 2 + gp / 2
    mw = om * c.imag
    dc = (1j * de - g2) * c + 0.5j * om * (p1 - p2)
    return np.array([
        -gp * p1 + rates.k31 * p3 + rates.k51 * p5 + g1 * (p2 - p1) - mw,
        -gp * p2 + rates.k42 * p4 + rates.k52 * p5 + g1 * (p1 - p2) + mw,
        gp * p1 - (rates.k31 + rates.k35) * p3,
        gp * p2 - (rates.k42 + rates.k45) * p4,
        rates.k35 * p3 + rates.k45 * p4 - (rates.k51 + rates.k52) * p5,
        dc.real,
        dc.imag,
    ])


def _rhs_jacobian(rates: RateSet, drive: DrivePoint) -> np.ndarray:
    # the equations are linear, so probing with unit vectors gives the exact Jacobian
    eye = np.eye(7)
    return np.column_stack([_rhs(0.0, e, rates, drive) for e in eye])


def default_t_end(rates: RateSet, drive: DrivePoint) -> float:
    """Integration horizon: many multiples of the slowest time scale.

    Takes the larger of 50/min(nonzero rate) and 40/(slowest relaxation
    mode); the latter catches slow optical-pumping polarization.
    """
    candidates = [v for v in (rates.k31, rates.k42, rates.k35, rates.k45, rates.k51,
                              rates.k52, rates.gamma1_mhz, rates.gamma2_star,
                              drive.gamma_p) if v > 0]
    if not candidates:
        return 1.0
    t_end = 50.0 / min(candidates)
    lam = np.linalg.eigvals(generator(rates, drive.omega, drive.gamma_p, drive.delta))
    decay = -lam.real[-lam.real > 1e-12 * max(candidates)]
    if decay.size:
        t_end = max(t_end, 40.0 / decay.min())
    return t_end


def steady_state_ode_oracle(rates: RateSet, drive: DrivePoint, t_end=None, dt=None,
                            rtol=1e-10, atol=1e-13) -> SteadyState:
    """Populations after integrating the equations of motion from rho11=rho22=1/2.

    Uses an implicit Radau integrator; ``dt`` is the initial step.  Raises
    NonConvergence when the state at ``t_end/2`` and ``t_end`` differ by more
    than 1e-6 in any population.
    """
    if t_end is None:
        t_end = default_t_end(rates, drive)
    y0 = np.array([0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0])
    sol = solve_ivp(_rhs, (0.0, t_end), y0, method="Radau", t_eval=[0.5 * t_end, t_end],
                    args=(rates, drive), rtol=rtol, atol=atol, first_step=dt,
                    jac=_rhs_jacobian(rates, drive))
    if not sol.success:
        raise NonConvergence(sol.message)
    half, end = sol.y[:5, 0], sol.y[:5, 1]
    if np.max(np.abs(end - half)) > 1e-6:
        raise NonConvergence(f"populations still drifting at t_end={t_end:g} us")
    return SteadyState(*(float(x) for x in end), coherence=complex(sol.y[5, 1], sol.y[6, 1]))


def ode_trajectory(rates: RateSet, drive: DrivePoint, t_end: float, n_points: int = 200):
    """Time grid and populations, for trace-conservation checks and demos."""
    y0 = np.array([0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0])
    t = np.linspace(0.0, t_end, n_points)
    sol = solve_ivp(_rhs, (0.0, t_end), y0, method="Radau", t_eval=t,
                    args=(rates, drive), rtol=1e-10, atol=1e-13,
                    jac=_rhs_jacobian(rates, drive))
    if not sol.success:
        raise NonConvergence(sol.message)
    return sol.t, sol.y[:5]
