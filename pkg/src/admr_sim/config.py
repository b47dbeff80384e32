"""Flat ``key = value`` run configuration with dotted namespaces.

Precedence: built-in defaults < config file < ``--set`` overrides.
"""
from __future__ import annotations

import os
from importlib import resources
from pathlib import Path

import numpy as np

from .bloch import RateSet
from .cavity import CavityConfig, DiamondSample, MirrorPair
from .errors import ConfigError, ParameterError
from .sensitivity import SensorDesign, SweepGrid
from .spectrum import LockinConfig

ENV_VAR = "ADMR_SIM_CONFIG"

# keys that only steer execution and never change results; not echoed
EXECUTION_KEYS = {"run.threads"}

# key -> (kind, default)
SCHEMA = {
    "rates.k31": ("float", "65.9"),
    "rates.k42": ("float", "65.9"),
    "rates.k35": ("float", "7.9"),
    "rates.k45": ("float", "53.3"),
    "rates.k51": ("float", "0.98"),
    "rates.k52": ("float", "1.46"),
    "rates.gamma1": ("float", "0.182"),
    "rates.gamma2_star": ("float", "0.33333333333333331"),
    "cavity.r1": ("float", "0.948"),
    "cavity.r2": ("float", "0.998"),
    "sample.nv_ppb": ("float", "0.16"),
    "sample.sigma_nv": ("float", "3.1e-15"),
    "sample.path_length": ("float", "2.6"),
    "sample.alpha0_abs": ("float", "0.0781"),
    "sample.alpha_r": ("float", "0.006"),
    "sample.epsilon": ("float", "75"),
    "drive.omega": ("float", "0.3"),
    "drive.p_in": ("float", "0.4"),
    "lockin.delta_mod": ("float_or_auto", "auto"),
    "lockin.a_par": ("float", "2.16"),
    "lockin.ml_set": ("intlist", "-1,0,1"),
    "lockin.mx_set": ("intlist", "-1,0,1"),
    "lockin.gain_v0": ("float", "65e6"),
    "lockin.channel": ("channel", "transmit"),
    "constants.gamma_e": ("float", "28.024e9"),
    "constants.wavelength_nm": ("float", "532"),
    "constants.n_carbon": ("float", "1.76e20"),
    "constants.d_zfs": ("float", "2.87e9"),
    "spectrum.delta": ("axis", "lin:-8:8:1601"),
    "slope_map.p_in": ("axis", "lin:0.05:0.8:16"),
    "slope_map.omega": ("axis", "lin:0.05:1:16"),
    "sweep.nv_ppb": ("axis", "log:1:1000:25"),
    "sweep.p_in": ("axis", "0.5"),
    "sweep.omega": ("axis", "lin:0.03:1:33"),
    "sweep.channel": ("channel", "reflect"),
    "sweep.r2": ("float", "0.999"),
    "sweep.nv_balanced": ("bool", "true"),
    "sweep.impedance_matched": ("bool", "true"),
    "optimize.rounds": ("int", "3"),
    "optimize.factor": ("int", "10"),
    "noise.resolution": ("float", "0.24"),
    "noise.taus": ("taus", "octave"),
    "noise.slope": ("float_or_none", "none"),
    "synth.kind": ("str", "white"),
    "synth.sample_rate": ("float", "1000"),
    "synth.length": ("int", "100000"),
    "synth.unit": ("str", "volts"),
    "synth.asd": ("float", "1e-6"),
    "synth.cutoff": ("float_or_none", "none"),
    "synth.rate": ("float", "0"),
    "synth.offset": ("float", "0"),
    "synth.amplitude": ("float", "0"),
    "synth.frequency": ("float", "10"),
    "synth.phase": ("float", "0"),
    "run.seed": ("int", "0"),
    "run.threads": ("int", "0"),
}


def parse_axis(text: str) -> np.ndarray:
    """``lin:a:b:n``, ``log:a:b:n``, a comma list, or a single number."""
    text = text.strip()
    try:
        if text.startswith(("lin:", "log:")):
            kind, a, b, n = text.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise ValueError("need at least one point")
            if n == 1:
                return np.array([a])
            if kind == "lin":
                return np.linspace(a, b, n)
            if a <= 0 or b <= 0:
                raise ValueError("log axis bounds must be positive")
            return np.geomspace(a, b, n)
        return np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"bad axis specification {text!r}: {exc}") from None


def _convert(key, kind, text):
    text = text.strip()
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "str":
            return text
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError("expected true/false")
            return low in ("true", "1", "yes")
        if kind == "float_or_auto":
            return None if text.lower() == "auto" else float(text)
        if kind == "float_or_none":
            return None if text.lower() in ("none", "") else float(text)
        if kind == "intlist":
            return tuple(int(x) for x in text.split(","))
        if kind == "channel":
            if text not in ("transmit", "reflect"):
                raise ValueError("expected transmit or reflect")
            return text
        if kind == "axis":
            return parse_axis(text)
        if kind == "taus":
            return "octave" if text == "octave" else parse_axis(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from None
    raise AssertionError(kind)


def read_config_text(text: str, source: str = "<string>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def shipped_configs() -> list[str]:
    root = resources.files("admr_sim") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(spec: str):
    """A filesystem path, or the name of a shipped config (fig3a, fig5d, ...)."""
    path = Path(spec)
    if path.is_file():
        return path.read_text(), str(path)
    name = spec[:-4] if spec.endswith(".cfg") else spec
    res = resources.files("admr_sim") / "configs" / f"{name}.cfg"
    if "/" not in spec and res.is_file():
        return res.read_text(), f"shipped:{name}"
    raise ConfigError(f"config file not found: {spec}")


class RunConfig:
    """Resolved configuration; ``raw`` keeps the textual form for echoing."""

    def __init__(self, raw: dict[str, str] | None = None, source: str = "defaults"):
        self.raw = {k: v for k, (_, v) in SCHEMA.items()}
        self.sources = [source]
        self.values = {}
        if raw:
            self.update(raw)
        else:
            self._parse()

    def _parse(self):
        self.values = {k: _convert(k, SCHEMA[k][0], v) for k, v in self.raw.items()}

    def update(self, raw: dict[str, str]):
        for k in raw:
            if k not in SCHEMA:
                raise ConfigError(f"unknown key {k!r}")
        self.raw.update({k: v.strip() for k, v in raw.items()})
        self._parse()

    @classmethod
    def load(cls, config: str | None = None, sets=(), env=None) -> "RunConfig":
        env = os.environ if env is None else env
        cfg = cls()
        config = config or env.get(ENV_VAR)
        if config:
            text, source = resolve_config_path(config)
            cfg.update(read_config_text(text, source))
            cfg.sources.append(source)
        overrides = {}
        for item in sets:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v
        if overrides:
            cfg.update(overrides)
            cfg.sources.append("--set")
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def echo_lines(self) -> list[str]:
        return [f"{k} = {self.raw[k]}" for k in sorted(self.raw) if k not in EXECUTION_KEYS]

    # model builders

    def _section(self, prefix):
        n = len(prefix) + 1
        return {k[n:]: v for k, v in self.values.items() if k.startswith(prefix + ".")}

    def _wrap(self, build):
        try:
            return build()
        except ParameterError as exc:
            raise ConfigError(str(exc)) from None

    def rates(self) -> RateSet:
        return self._wrap(lambda: RateSet(**self._section("rates")))

    def sample(self) -> DiamondSample:
        s = self._section("sample")
        return self._wrap(lambda: DiamondSample(n_carbon=self["constants.n_carbon"], **s))

    def cavity(self) -> CavityConfig:
        return self._wrap(lambda: CavityConfig(
            MirrorPair(self["cavity.r1"], self["cavity.r2"]), self.sample()))

    def lockin(self) -> LockinConfig:
        s = self._section("lockin")
        return self._wrap(lambda: LockinConfig(**s))

    def design(self) -> SensorDesign:
        return self._wrap(lambda: SensorDesign(
            r2=self["sweep.r2"], r1=self["cavity.r1"], sample=self.sample(),
            rates=self.rates(), nv_balanced=self["sweep.nv_balanced"],
            impedance_matched=self["sweep.impedance_matched"],
            gamma_e=self["constants.gamma_e"], wavelength_nm=self["constants.wavelength_nm"]))

    def sweep_grid(self) -> SweepGrid:
        return self._wrap(lambda: SweepGrid(
            self["sweep.nv_ppb"], self["sweep.p_in"], self["sweep.omega"]))

    def threads(self) -> int:
        n = self["run.threads"]
        return n if n > 0 else (os.cpu_count() or 1)
