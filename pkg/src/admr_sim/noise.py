"""Noise analysis of lock-in time traces: ASD, Allan deviation, filter model."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np
from scipy import signal

from .errors import BadParams, ParameterError, TauOutOfRange, TraceTooShort, ZeroSlope

UNITS = ("volts", "tesla")


@dataclass(frozen=True)
class TimeTrace:
    sample_rate: float  # Hz
    values: np.ndarray
    unit: str = "volts"
    origin: str = "measured"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ParameterError("trace values must be one-dimensional")
        if v.size < 2:
            raise TraceTooShort("a trace needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise ParameterError("trace contains non-finite samples")
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise ParameterError("sample_rate must be > 0")
        if self.unit not in UNITS:
            raise ParameterError(f"unit must be one of {UNITS}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) / self.sample_rate


@dataclass
class Spectrum:
    frequencies: np.ndarray  # Hz
    asd: np.ndarray  # unit/sqrt(Hz)
    n_segments: int
    unit: str


@dataclass
class AllanResult:
    taus: np.ndarray  # s
    deviations: np.ndarray
    counts: np.ndarray


def asd(trace: TimeTrace, resolution: float = 0.24) -> Spectrum:
    """Single-sided amplitude spectral density by segment averaging.

    Rectangular window, 50 % overlap, segment length round(fs/resolution),
    per-segment mean removed.
    """
    n = len(trace)
    if not resolution > 0:
        raise ParameterError("resolution must be > 0")
    nperseg = int(round(trace.sample_rate / resolution))
    if nperseg < 2 or nperseg > n:
        raise TraceTooShort(
            f"resolution {resolution} Hz needs {nperseg} samples per segment, trace has {n}")
    noverlap = nperseg // 2
    f, psd = signal.welch(trace.values, fs=trace.sample_rate, window="boxcar",
                          nperseg=nperseg, noverlap=noverlap, detrend="constant",
                          scaling="density", return_onesided=True)
    n_seg = 1 + (n - nperseg) // (nperseg - noverlap)
    return Spectrum(f, np.sqrt(psd), n_seg, trace.unit)


def volts_to_tesla(trace: TimeTrace, slope: float, gamma_e: float) -> TimeTrace:
    """Convert a lock-in voltage trace with slope (V/Hz) into magnetic field."""
    if slope == 0:
        raise ZeroSlope("cannot calibrate with zero slope")
    return replace(trace, values=trace.values / (slope * gamma_e), unit="tesla")


def _scaled_integers(x: np.ndarray):
    """Exact representation x = n * 2**e with Python integers n."""
    mant, expo = np.frexp(x)
    m = (mant * 2.0 ** 53).astype(np.int64)
    expo = expo.astype(np.int64) - 53
    e = int(expo[m != 0].min()) if np.any(m != 0) else 0
    shifts = np.where(m != 0, expo - e, 0)
    ints = np.array([int(a) << int(s) for a, s in zip(m.tolist(), shifts.tolist())], dtype=object)
    return ints, e


def _taus_to_m(taus, sample_rate, n):
    ms = []
    for tau in np.atleast_1d(np.asarray(taus, dtype=float)):
        m_float = tau * sample_rate
        m = int(round(m_float))
        if m < 1 or abs(m_float - m) > 1e-9 * max(1.0, m_float):
            raise TauOutOfRange(f"tau={tau!r} s is not a whole number of samples")
        if 2 * m > n:
            raise TauOutOfRange(f"tau={tau!r} s needs {2 * m} samples, trace has {n}")
        ms.append(m)
    return ms


def allan_overlapping(trace: TimeTrace, taus) -> AllanResult:
    """Overlapping Allan deviation of a sampled stream.

    sigma^2(tau) = sum_i (xbar_{i+m} - xbar_i)^2 / (2 K), i = 0..K-1,
    K = N - 2m + 1, with xbar_i the mean of samples [i, i+m) and
    tau = m / fs.  The sum is evaluated in exact rational arithmetic, so the
    returned value is the correctly rounded deviation for the given samples.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(np.diff(taus) <= 0):
        raise TauOutOfRange("taus must be strictly increasing")
    n = len(trace)
    ms = _taus_to_m(taus, trace.sample_rate, n)
    ints, e = _scaled_integers(trace.values)
    csum = np.concatenate([np.array([0], dtype=object), np.cumsum(ints)])
    devs, counts = [], []
    for m in ms:
        window = csum[m:] - csum[:-m]  # m * xbar_i, scaled
        diff = window[m:] - window[:-m]
        k = n - 2 * m + 1
        ssq = int(np.dot(diff, diff)) if diff.size else 0
        var = Fraction(ssq, 2 * k * m * m)
        var *= Fraction(2) ** (2 * e) if e >= 0 else Fraction(1, 2 ** (-2 * e))
        devs.append(math.sqrt(float(var)))
        counts.append(k)
    return AllanResult(taus, np.array(devs), np.array(counts))


def octave_taus(trace: TimeTrace, max_fraction: float = 0.5) -> np.ndarray:
    """tau = 2^k / fs up to ``max_fraction`` of the trace duration."""
    n = len(trace)
    ms = []
    m = 1
    while 2 * m <= n and m <= max_fraction * n:
        ms.append(m)
        m *= 2
    return np.array(ms) / trace.sample_rate


def lowpass_response(f, cutoff: float):
    """Magnitude of the second-order (12 dB/octave) lock-in output filter."""
    if not cutoff > 0:
        raise ParameterError("cutoff must be > 0")
    f = np.asarray(f, dtype=float)
    out = 1.0 / (1.0 + (f / cutoff) ** 2)
    return float(out) if out.ndim == 0 else out


def synth_trace(kind: str, params: dict, seed: int | None, sample_rate: float,
                length: int, unit: str = "volts") -> TimeTrace:
    """Deterministic synthetic trace.

    ``kind`` is any '+'-joined combination of ``white`` (params ``asd``,
    optional ``cutoff`` to apply the lock-in filter), ``drift`` (``rate``
    per second, optional ``offset``) and ``sine`` (``amplitude``,
    ``frequency``, optional ``phase``).
    """
    if length < 2:
        raise BadParams("length must be >= 2")
    if not sample_rate > 0:
        raise BadParams("sample_rate must be > 0")
    parts = kind.split("+")
    unknown = set(parts) - {"white", "drift", "sine"}
    if unknown or not kind:
        raise BadParams(f"unknown trace kind(s): {sorted(unknown) or kind!r}")
    rng = np.random.default_rng(seed)
    t = np.arange(length) / sample_rate
    x = np.zeros(length)
    try:
        if "white" in parts:
            a = float(params["asd"])
            if a < 0:
                raise BadParams("white-noise asd must be >= 0")
            noise = rng.standard_normal(length) * a * math.sqrt(sample_rate / 2.0)
            cutoff = params.get("cutoff")
            if cutoff:
                spec = np.fft.rfft(noise)
                spec *= lowpass_response(np.fft.rfftfreq(length, 1.0 / sample_rate), float(cutoff))
                noise = np.fft.irfft(spec, n=length)
            x += noise
        if "drift" in parts:
            x += float(params["rate"]) * t + float(params.get("offset", 0.0))
        if "sine" in parts:
            x += float(params["amplitude"]) * np.sin(
                2 * np.pi * float(params["frequency"]) * t + float(params.get("phase", 0.0)))
    except KeyError as exc:
        raise BadParams(f"missing parameter {exc.args[0]!r} for kind {kind!r}") from None
    return TimeTrace(sample_rate, x, unit, origin=f"synthetic({seed})")


def loglog_slope(x, y) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
