"""Scenario configuration: the full set of simulation constants, loadable
from an INI-style file (flat keys inside named sections, unknown keys
rejected)."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

from .errors import ConfigError

__all__ = ["SystemConfig", "load_config"]


@dataclass
class SystemConfig:
    # network
    L: int = 4                # access points
    N: int = 4                # antennas per AP
    K: int = 4                # single-antenna UEs
    tau_p: int = 10           # pilot length, symbols
    eta_k: float = 0.1        # per-UE pilot transmit power, watts
    rho: float = 1.0          # data symbol power normalization, watts
    beta_th: float = -40.0    # non-master AP threshold, dB relative to master
    area_side: float = 1000.0  # service square side, meters
    ap_height: float = 10.0   # AP elevation above the UE plane, meters
    # code
    C_leng: int = 256         # codeword length, bits
    M: int = 128              # parity bits
    M_c: int = 2              # bits per symbol
    # simulation
    snr_grid: list = field(default_factory=lambda: [-2.0, 0.0, 2.0, 4.0,
                                                    6.0, 8.0, 10.0])
    idd_iters: int = 3        # outer detector/decoder exchanges
    dec_iters: int = 10       # inner decoder iterations
    trials: int = 10000       # Monte Carlo channel realizations
    seed: int = 0
    # recorded scenario constants with no operational role here
    tau_u: int = 190
    tau_c: int = 200
    d_th: float = 0.38

    def validate(self) -> "SystemConfig":
        if min(self.L, self.N, self.K, self.tau_p) < 1:
            raise ConfigError("L, N, K and tau_p must all be at least 1")
        if min(self.idd_iters, self.dec_iters, self.trials) < 1:
            raise ConfigError("iteration and trial counts must be positive")
        if self.C_leng != 2 * self.M:
            raise ConfigError("code rate is fixed at 1/2: C_leng must be 2*M")
        if self.M_c != 2:
            raise ConfigError("modulation is fixed at QPSK: M_c must be 2")
        if self.eta_k <= 0 or self.rho <= 0:
            raise ConfigError("transmit powers must be positive")
        if self.area_side <= 0 or self.ap_height <= 0:
            raise ConfigError("geometry dimensions must be positive")
        if len(self.snr_grid) == 0:
            raise ConfigError("snr_grid must not be empty")
        return self


_SECTIONS = {
    "network": ("L", "N", "K", "tau_p", "eta_k", "rho", "beta_th",
                "area_side", "ap_height"),
    "code": ("C_leng", "M", "M_c"),
    "sim": ("snr_grid", "idd_iters", "dec_iters", "trials", "seed"),
    "metadata": ("tau_u", "tau_c", "d_th"),
}

_INT_FIELDS = {f.name for f in fields(SystemConfig) if f.type == "int"}


def _parse_value(key: str, raw: str):
    if key == "snr_grid":
        parts = raw.replace(",", " ").split()
        return [float(p) for p in parts]
    try:
        if key in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {raw!r}: {exc}")


def load_config(path) -> SystemConfig:
    """Read a SystemConfig from an INI file; unknown sections/keys error."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # field names are case sensitive
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read configuration file {path}")

    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown configuration section [{section}]")
        allowed = _SECTIONS[section]
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(
                    f"unknown key {key!r} in section [{section}]")
            values[key] = _parse_value(key, raw)

    return SystemConfig(**values).validate()


def snr_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)
