"""Run configuration: sectioned key = value files, strictly validated.

The format is deliberately diff-friendly: one [section] per concern, every
key explicit.  Unknown sections or keys are hard errors (no silent typo
tolerance), and serialization materializes every default, so the echoed file
is the complete record of a run.  parse(serialize(cfg)) round-trips exactly.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass

import numpy as np

from capns.grid import Grid, make_grid
from capns.kernels import CapillaryModel
from capns.pressure import PressureLaw
from capns.solver import Harmonic, PhysParams, RandomBand, StepperConfig, TwoPhase


class ConfigError(ValueError):
    pass


_NONE = object()

# section -> key -> (parser, default); default _NONE means required,
# default None means optional-empty
_SCHEMA = {
    "grid": {
        "dim": (int, 1),
        "n": (int, _NONE),
        "length": (float, 2.0 * np.pi),
    },
    "model": {
        "variant": (str, _NONE),
        "kappa": (float, 0.0),
        "epsilon": (float, None),
        "alpha": (float, None),
    },
    "physics": {
        "mu": (float, _NONE),
        "lambda": (float, 0.0),
    },
    "pressure": {
        "kind": (str, "gamma"),
        "a_coeff": (float, 1.0),
        "gamma": (float, 2.0),
        "vdw_a": (float, 0.0),
        "vdw_b": (float, 0.0),
        "rt": (float, 1.0),
    },
    "stepper": {
        "dt": (float, _NONE),
        "t_end": (float, _NONE),
        "sample_every": (int, 1),
        "dealias": (bool, True),
        "density_floor": (float, None),
        "density_ceiling": (float, None),
    },
    "initial": {
        "profile": (str, _NONE),
        "rho1": (float, 0.9),
        "rho2": (float, 1.1),
        "interface_width": (float, 0.2),
        "q_amp": (float, 0.01),
        "u_amp": (float, 0.0),
        "mode": ("intlist", [1]),
        "seed": (int, 0),
        "mode_lo": (int, 1),
        "mode_hi": (int, 8),
    },
    "sweep": {
        "family": (str, "NSRW"),
        "values": ("floatlist", []),
        "h": (float, 0.5),
    },
    "norms": {
        "s": (float, 0.5),
        "beta": (float, None),
    },
    "output": {
        "directory": (str, ""),
    },
}

_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_value(kind, raw: str, where: str):
    raw = raw.strip()
    if raw.lower() in ("", "none", "auto"):
        if kind in ("floatlist", "intlist"):
            return []
        return "" if kind is str else None
    try:
        if kind is bool:
            return _BOOL[raw.lower()]
        if kind == "floatlist":
            return [float(t) for t in raw.replace(",", " ").split()]
        if kind == "intlist":
            return [int(t) for t in raw.replace(",", " ").split()]
        return kind(raw)
    except (ValueError, KeyError):
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def _format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, list):
        return ", ".join(repr(float(x)) if isinstance(x, float) else str(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)  # plain str; "" round-trips through the empty branch


@dataclass
class RunConfig:
    """Validated, fully-materialized configuration (every default explicit)."""

    sections: dict

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self.sections == other.sections

    def get(self, section: str, key: str):
        return self.sections[section][key]

    # --- typed views -----------------------------------------------------

    def grid(self) -> Grid:
        g = self.sections["grid"]
        return make_grid(g["dim"], g["n"], g["length"])

    def model(self) -> CapillaryModel:
        m = self.sections["model"]
        return CapillaryModel(
            variant=m["variant"], kappa=m["kappa"], epsilon=m["epsilon"], alpha=m["alpha"]
        )

    def params(self) -> PhysParams:
        p = self.sections["physics"]
        return PhysParams(mu=p["mu"], lam=p["lambda"])

    def law(self) -> PressureLaw:
        pr = self.sections["pressure"]
        if pr["kind"] == "gamma":
            return PressureLaw(kind="gamma", A=pr["a_coeff"], gamma=pr["gamma"])
        return PressureLaw(kind="vdw", a=pr["vdw_a"], b=pr["vdw_b"], RT=pr["rt"])

    def stepper(self) -> StepperConfig:
        st = self.sections["stepper"]
        return StepperConfig(
            dt=st["dt"],
            t_end=st["t_end"],
            sample_every=st["sample_every"],
            dealias=st["dealias"],
            density_floor=st["density_floor"],
            density_ceiling=st["density_ceiling"],
        )

    def profile(self):
        ini = self.sections["initial"]
        kind = ini["profile"]
        if kind == "two_phase":
            return TwoPhase(
                rho1=ini["rho1"], rho2=ini["rho2"], interface_width=ini["interface_width"]
            )
        if kind == "harmonic":
            return Harmonic(q_amp=ini["q_amp"], u_amp=ini["u_amp"], mode=tuple(ini["mode"]))
        if kind == "random_band":
            return RandomBand(
                seed=ini["seed"],
                mode_lo=ini["mode_lo"],
                mode_hi=ini["mode_hi"],
                q_amp=ini["q_amp"],
                u_amp=ini["u_amp"],
            )
        raise ConfigError(f"initial.profile: unknown profile {kind!r}")

    def sweep_values(self) -> list:
        return self.sections["sweep"]["values"]


def _validate(sections: dict) -> None:
    g = sections["grid"]
    if g["dim"] not in (1, 2):
        raise ConfigError("Grid: dim in {1, 2}")
    n = g["n"]
    if n is None or n < 16 or (n & (n - 1)) != 0:
        raise ConfigError("Grid: n power of two >= 16")
    if g["length"] is None or g["length"] <= 0:
        raise ConfigError("Grid: length > 0")

    m = sections["model"]
    if m["variant"] not in ("NSC", "NSK", "NSRW", "NSOP"):
        raise ConfigError("Model: variant in {NSC, NSK, NSRW, NSOP}")
    if m["kappa"] < 0:
        raise ConfigError("Model: kappa >= 0")
    if m["variant"] == "NSRW" and (m["epsilon"] is None or m["epsilon"] <= 0):
        raise ConfigError("Potential: epsilon > 0")
    if m["variant"] == "NSOP" and (m["alpha"] is None or m["alpha"] <= 0):
        raise ConfigError("Potential: alpha > 0")

    p = sections["physics"]
    if p["mu"] is None or min(p["mu"], 2 * p["mu"] + p["lambda"]) <= 0:
        raise ConfigError("PhysParams: min(mu, 2mu+lambda) > 0")

    pr = sections["pressure"]
    if pr["kind"] not in ("gamma", "vdw"):
        raise ConfigError("PressureLaw: kind in {gamma, vdw}")
    if pr["kind"] == "gamma" and (pr["a_coeff"] <= 0 or pr["gamma"] < 1):
        raise ConfigError("PressureLaw: A > 0 and gamma >= 1")
    if pr["kind"] == "vdw" and (pr["vdw_a"] < 0 or pr["vdw_b"] < 0 or pr["rt"] <= 0):
        raise ConfigError("PressureLaw: a, b >= 0 and RT > 0")

    st = sections["stepper"]
    if st["dt"] is None or st["dt"] <= 0 or st["t_end"] is None or st["t_end"] <= 0:
        raise ConfigError("Stepper: dt > 0 and t_end > 0")
    if st["sample_every"] < 1:
        raise ConfigError("Stepper: sample_every >= 1")

    ini = sections["initial"]
    if ini["profile"] not in ("two_phase", "harmonic", "random_band"):
        raise ConfigError("Initial: profile in {two_phase, harmonic, random_band}")
    if ini["profile"] == "two_phase" and (ini["rho1"] <= 0 or ini["rho2"] <= 0):
        raise ConfigError("Initial: rho1, rho2 > 0")

    sw = sections["sweep"]
    if sw["family"] not in ("NSRW", "NSOP"):
        raise ConfigError("Sweep: family in {NSRW, NSOP}")


def parse_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    sections = {}
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]")

    for sec, keys in _SCHEMA.items():
        out = {}
        for key, (kind, default) in keys.items():
            if cp.has_option(sec, key):
                out[key] = _parse_value(kind, cp.get(sec, key), f"[{sec}] {key}")
            elif default is _NONE:
                raise ConfigError(f"missing required key {key!r} in section [{sec}]")
            else:
                out[key] = default
        sections[sec] = out

    _validate(sections)
    return RunConfig(sections=sections)


def parse_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def serialize(cfg: RunConfig) -> str:
    """Canonical text form with every default materialized."""
    buf = io.StringIO()
    for sec in _SCHEMA:
        buf.write(f"[{sec}]\n")
        for key in _SCHEMA[sec]:
            buf.write(f"{key} = {_format_value(cfg.sections[sec][key])}\n")
        buf.write("\n")
    return buf.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()
