"""Scenario configuration, power delay profiles and derived quantities.

Everything downstream (simulator, densities, estimators, harness) consumes the
two value types defined here. Both are immutable; building them twice from the
same inputs gives bit-identical contents.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError


class SourceModel(enum.Enum):
    GAUSSIAN_IID = "gaussian_iid"
    QAM_IFFT = "qam_ifft"


@dataclass(frozen=True)
class SystemConfig:
    n_x: int = 128                  # data samples per symbol
    n_z: int = 15                   # trailing zero-pad samples
    n_h: int = 10                   # channel taps
    N: int = 10                     # observed symbols per window
    T_sa: float = 1e-6              # sample period [s]
    sigma_x2: float = 1.0           # transmit sample variance [W]
    modulation_order: int = 128     # M, power of two
    source_model: SourceModel = SourceModel.QAM_IFFT
    ebn0_db: float = 15.0
    max_doppler_hz: float = 5.0     # f_D
    to_range: tuple[int, int] = (-30, 30)   # inclusive hypothesis range
    trial_seed: int = 12345
    mcs_samples: int = 10_000       # L, kernel draws per density table

    def __post_init__(self):
        object.__setattr__(self, "to_range", tuple(int(d) for d in self.to_range))
        if self.n_x < 1:
            raise ConfigError("n_x must be a positive integer")
        if self.n_z < 0:
            raise ConfigError("n_z must be nonnegative")
        if self.n_h < 1:
            raise ConfigError("n_h must be a positive integer")
        if self.n_z < self.n_h - 1:
            raise ConfigError(
                f"n_z={self.n_z} shorter than channel memory {self.n_h - 1}: "
                "inter-symbol interference would leak across symbols"
            )
        if self.N < 1:
            raise ConfigError("N must be a positive integer")
        if not (self.T_sa > 0):
            raise ConfigError("T_sa must be positive")
        if not (self.sigma_x2 > 0):
            raise ConfigError("sigma_x2 must be positive")
        m = self.modulation_order
        if m < 2 or (m & (m - 1)) != 0:
            raise ConfigError("modulation_order must be a power of two >= 2")
        if not isinstance(self.source_model, SourceModel):
            raise ConfigError(f"unknown source model: {self.source_model!r}")
        if not math.isfinite(self.ebn0_db):
            raise ConfigError("ebn0_db must be finite")
        if self.max_doppler_hz < 0:
            raise ConfigError("max_doppler_hz must be nonnegative")
        if len(self.to_range) != 2:
            raise ConfigError("to_range must be a (d_min, d_max) pair")
        d_min, d_max = self.to_range
        if d_min > d_max:
            raise ConfigError(f"empty to_range: ({d_min}, {d_max})")
        if d_min < -self.n_s + 1 or d_max > self.n_s - 1:
            raise ConfigError(
                f"to_range ({d_min}, {d_max}) outside the hypothesis set "
                f"[{-self.n_s + 1}, {self.n_s - 1}]"
            )
        if self.mcs_samples < 1:
            raise ConfigError("mcs_samples must be >= 1")

    @property
    def n_s(self) -> int:
        """Samples per padded symbol."""
        return self.n_x + self.n_z

    @property
    def window_length(self) -> int:
        return self.N * self.n_s

    @property
    def d_values(self) -> np.ndarray:
        """All hypothesis offsets, ascending."""
        return np.arange(self.to_range[0], self.to_range[1] + 1)


@dataclass(frozen=True)
class PowerDelayProfile:
    """Per-tap variances of the fading channel, known at the receiver."""

    variances: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))
        if len(self.variances) == 0:
            raise ConfigError("delay profile needs at least one tap")
        if any(not (v > 0) or not math.isfinite(v) for v in self.variances):
            raise ConfigError("all tap variances must be positive and finite")

    @property
    def n_taps(self) -> int:
        return len(self.variances)

    @property
    def total_power(self) -> float:
        return float(sum(self.variances))

    def lambdas(self, sigma_x2: float) -> np.ndarray:
        """Decay rates 2/(sigma_h_l * sigma_x) of the per-tap signal parts."""
        v = np.asarray(self.variances, dtype=float)
        return 2.0 / np.sqrt(v * sigma_x2)


def exponential_pdp(n_h: int, beta: float) -> PowerDelayProfile:
    """Exponential-decay profile, renormalized to unit total power.

    variances[l] = alpha * exp(-beta * l) with alpha = 1 / sum(exp(-beta * l)).
    """
    if n_h < 1:
        raise ConfigError("n_h must be >= 1")
    if not (beta > 0):
        raise ConfigError("beta must be positive")
    raw = np.exp(-beta * np.arange(n_h, dtype=float))
    return PowerDelayProfile(tuple(raw / raw.sum()))


def noise_variance_from_ebn0(cfg: SystemConfig, pdp: PowerDelayProfile | None = None) -> float:
    """Total complex noise variance sigma_w^2 for the configured Eb/N0.

    Linear SNR is taken as (Eb/N0) * log2(M), so
    sigma_w^2 = sigma_x^2 * p_h / (10^(ebn0_db/10) * log2(M)).
    With the default unit-power profile, 15 dB and M=128 this gives ~4.52e-3.
    """
    p_h = 1.0 if pdp is None else pdp.total_power
    bits = math.log2(cfg.modulation_order)
    return cfg.sigma_x2 * p_h / (10.0 ** (cfg.ebn0_db / 10.0) * bits)


# --- line-oriented key=value persistence -----------------------------------

_INT_FIELDS = {"n_x", "n_z", "n_h", "N", "modulation_order", "trial_seed", "mcs_samples"}
_FLOAT_FIELDS = {"T_sa", "sigma_x2", "ebn0_db", "max_doppler_hz"}
_FIELD_NAMES = {f.name for f in fields(SystemConfig)} | {"n_s"}


def parse_config_text(text: str) -> SystemConfig:
    """Parse `key = value` lines into a SystemConfig.

    Blank lines and `#` comments are ignored. Unknown keys are rejected so a
    typo cannot silently fall back to a default. `n_s` is accepted but must
    agree with n_x + n_z.
    """
    kwargs: dict = {}
    n_s_declared = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_NAMES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in kwargs or (key == "n_s" and n_s_declared is not None):
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key == "n_s":
                n_s_declared = int(value)
            elif key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(value)
            elif key == "source_model":
                kwargs[key] = SourceModel(value.strip().lower())
            elif key == "to_range":
                parts = value.replace(",", " ").split()
                if len(parts) != 2:
                    raise ValueError("need two integers")
                kwargs[key] = (int(parts[0]), int(parts[1]))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r} ({exc})") from None
    cfg = SystemConfig(**kwargs)
    if n_s_declared is not None and n_s_declared != cfg.n_s:
        raise ConfigError(f"n_s={n_s_declared} inconsistent with n_x+n_z={cfg.n_s}")
    return cfg


def format_config(cfg: SystemConfig) -> str:
    lines = []
    for f in fields(SystemConfig):
        value = getattr(cfg, f.name)
        if f.name == "source_model":
            value = value.value
        elif f.name == "to_range":
            value = f"{value[0]} {value[1]}"
        lines.append(f"{f.name} = {value}")
    lines.append(f"n_s = {cfg.n_s}")
    return "\n".join(lines) + "\n"


def load_config(path) -> SystemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def save_config(cfg: SystemConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_config(cfg))
