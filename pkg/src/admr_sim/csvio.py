"""CSV output with '#' comment headers, and the two-column trace format."""
from __future__ import annotations

import io
import math

import numpy as np

from .errors import ConfigError, ParameterError
from .noise import TimeTrace

TRACE_TAG = "# trace:"
JITTER_TOL = 1e-6


def fmt(x) -> str:
    """17 significant digits: round-trips every float64 exactly."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.17g}"


def render_csv(comments, columns, rows) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n" if line else "#\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def trace_rows(trace: TimeTrace):
    return zip(trace.times, trace.values)


def render_trace(trace: TimeTrace, comments=()) -> str:
    head = list(comments)
    text = render_csv(head, ["time_s", "value"], trace_rows(trace))
    tag = f"{TRACE_TAG} unit={trace.unit} sample_rate={fmt(trace.sample_rate)}\n"
    return tag + text


def parse_trace(text: str, source: str = "<trace>") -> TimeTrace:
    """Parse the trace CSV; malformed input raises ConfigError naming the line."""
    unit, rate = "volts", None
    times, values = [], []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(TRACE_TAG):
            for item in line[len(TRACE_TAG):].split():
                if "=" not in item:
                    raise ConfigError(f"{source}:{lineno}: bad trace header item {item!r}")
                k, v = item.split("=", 1)
                if k == "unit":
                    unit = v
                elif k == "sample_rate":
                    try:
                        rate = float(v)
                    except ValueError:
                        raise ConfigError(f"{source}:{lineno}: bad sample_rate {v!r}") from None
            continue
        if line.startswith("#"):
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["time_s", "value"]:
                raise ConfigError(f"{source}:{lineno}: expected header 'time_s,value'")
            header_seen = True
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise ConfigError(f"{source}:{lineno}: expected 2 columns, got {len(cells)}")
        try:
            t, v = float(cells[0]), float(cells[1])
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: non-numeric value") from None
        if not (math.isfinite(t) and math.isfinite(v)):
            raise ConfigError(f"{source}:{lineno}: non-finite value")
        times.append(t)
        values.append(v)
    if not header_seen:
        raise ConfigError(f"{source}: missing 'time_s,value' header")
    if len(values) < 2:
        raise ConfigError(f"{source}: trace needs at least two samples")
    t = np.array(times)
    dt = np.diff(t)
    nominal = 1.0 / rate if rate else float(np.mean(dt))
    if nominal <= 0 or np.max(np.abs(dt - nominal)) > JITTER_TOL * nominal:
        bad = int(np.argmax(np.abs(dt - nominal))) + 1
        raise ConfigError(f"{source}: irregular timestamps near sample {bad}")
    try:
        return TimeTrace(1.0 / nominal if rate is None else rate, np.array(values), unit)
    except ParameterError as exc:
        raise ConfigError(f"{source}: {exc}") from None
