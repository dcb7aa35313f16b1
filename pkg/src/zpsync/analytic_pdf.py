"""Closed-form densities for the components of received ZP-OFDM samples.

Conditioned on a timing hypothesis, the in-phase (or quadrature) component of
one received sample is V + W: W is Gaussian noise with per-component variance
sigma_w^2/2, and V is a difference of two iid sums of exponentials, one
Exp(lambda_l) pair per channel tap that reaches the sample. Which taps reach a
sample depends only on its in-symbol index m, captured by TapRange below.

The density of V + W has a closed form as a signed mixture of terms
erfcx(lambda_j*sigma_w/2 -+ |y|/sigma_w); everything here evaluates that form
(and the V density itself) in log space without overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx, logsumexp

from .config import PowerDelayProfile, SystemConfig
from .errors import DegeneratePdpError, NumericalFailure

# Below this argument erfcx(x) ~ 2 exp(x^2) overflows; switch to the exact
# exponential asymptote of the bracket instead.
_ERFCX_ARG_FLOOR = -20.0
_DUPLICATE_REL_GAP = 1e-9


class NoiseOnly:
    """Sentinel for in-symbol indices carrying no signal energy."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NoiseOnly"


NOISE_ONLY = NoiseOnly()


@dataclass(frozen=True)
class TapRange:
    """Inclusive range [a, b] of channel taps contributing to a sample."""

    a: int
    b: int

    def __post_init__(self):
        if not (0 <= self.a <= self.b):
            raise ValueError(f"invalid tap range ({self.a}, {self.b})")

    @property
    def width(self) -> int:
        return self.b - self.a + 1


def tap_range(m: int, cfg: SystemConfig):
    """Contributing-tap range for in-symbol index m, or NOISE_ONLY.

    The data block occupies indices 0..n_x-1 and the channel smears it n_h-1
    samples into the pad, so index m sees taps max(0, m-n_x+1)..min(m, n_h-1);
    pad indices past n_x+n_h-2 see nothing but noise.
    """
    m = int(m)
    if m < 0 or m > cfg.n_s - 1:
        raise ValueError(f"in-symbol index {m} outside [0, {cfg.n_s - 1}]")
    a = max(0, m - cfg.n_x + 1)
    b = min(m, cfg.n_h - 1)
    if a > b:
        return NOISE_ONLY
    return TapRange(a, b)


@dataclass(frozen=True)
class PdfCoefficients:
    """Precomputed mixture data for one tap range.

    c[j, n] = (prod_i lam_i)^2 / (D_j * D_n * (lam_j + lam_n)) with
    D_j = prod_{k != j} (lam_k - lam_j); weights[j] = sum_n c[j, n] multiplies
    exp(-lam_j |v|) in the signal-part density and the matching erfcx bracket
    in the component density. Weights alternate in sign.
    """

    lambdas: np.ndarray
    c: np.ndarray
    weights: np.ndarray

    @property
    def width(self) -> int:
        return len(self.lambdas)


def _resolve_range(m, cfg):
    if isinstance(m, TapRange):
        return m
    if isinstance(m, NoiseOnly):
        raise ValueError("noise-only index has no signal-part density")
    if cfg is None:
        raise ValueError("an integer index needs cfg to resolve its tap range")
    taps = tap_range(m, cfg)
    if taps is NOISE_ONLY:
        raise ValueError(f"index {m} is noise-only; use log_pdf_noise")
    return taps


def pdf_coefficients(
    taps: TapRange,
    pdp: PowerDelayProfile,
    sigma_x2: float = 1.0,
    perturb_duplicates: bool = False,
) -> PdfCoefficients:
    """Build the mixture coefficients for one tap range.

    Duplicate decay rates make the partial-fraction denominators vanish;
    they are rejected unless perturb_duplicates opts into a 1e-6 relative
    jitter (with a warning).
    """
    lam = np.asarray(pdp.lambdas(sigma_x2)[taps.a : taps.b + 1], dtype=float)
    lam = _dedupe(lam, perturb_duplicates)
    # diff[j, k] = lam_k - lam_j; row products over k != j give D_j
    diff = lam[None, :] - lam[:, None]
    np.fill_diagonal(diff, 1.0)
    d = diff.prod(axis=1)
    prod_sq = np.prod(lam) ** 2
    c = prod_sq / (d[:, None] * d[None, :] * (lam[:, None] + lam[None, :]))
    weights = c.sum(axis=1)
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(weights))):
        raise NumericalFailure("mixture coefficients overflowed double precision")
    return PdfCoefficients(lambdas=lam, c=c, weights=weights)


def _dedupe(lam, perturb):
    gaps = np.abs(lam[None, :] - lam[:, None]) / np.abs(lam[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() >= _DUPLICATE_REL_GAP:
        return lam
    if not perturb:
        raise DegeneratePdpError(
            "duplicate decay rates within a tap range; density denominators "
            "are singular (pass perturb_duplicates=True to jitter them)"
        )
    warnings.warn("perturbing duplicate decay rates by 1e-6 relative steps")
    lam = lam.copy()
    order = np.argsort(lam, kind="stable")
    for prev, cur in zip(order[:-1], order[1:]):
        # enforce a strictly increasing sorted sequence, compounding bumps
        if lam[cur] - lam[prev] < _DUPLICATE_REL_GAP * lam[cur]:
            lam[cur] = lam[prev] * (1.0 + 1e-6)
    return lam


def log_pdf_noise(y, sigma_w2: float):
    """Log density of a noise-only component: N(0, sigma_w2/2)."""
    y = np.asarray(y, dtype=float)
    out = -y * y / sigma_w2 - 0.5 * math.log(math.pi * sigma_w2)
    return out if out.ndim else float(out)


def _log_brackets(u, coeffs, sigma_w2):
    """log of exp(-u^2) * (erfcx(A_j - u) + erfcx(A_j + u)) / 2, row per j.

    u = |y|/sigma_w >= 0 and A_j = lam_j*sigma_w/2. Where A_j - u is very
    negative the erfcx there overflows, but the bracket itself reduces to the
    pure exponential tail exp(A_j^2 - 2*A_j*u) (the reflected erfcx term and
    the correction are both below 1e-170 relative); use that branch instead.
    """
    sw = math.sqrt(sigma_w2)
    a_par = coeffs.lambdas * sw / 2.0
    x = a_par[:, None] - u[None, :]
    out = a_par[:, None] ** 2 - 2.0 * a_par[:, None] * u[None, :]
    ok = x > _ERFCX_ARG_FLOOR
    if np.any(ok):
        j_idx, y_idx = np.nonzero(ok)
        xa = x[ok]
        xb = a_par[j_idx] + u[y_idx]
        uu = u[y_idx]
        out[ok] = -uu * uu + np.log(0.5 * (erfcx(xa) + erfcx(xb)))
    return out


def log_pdf_signal(y, m, pdp: PowerDelayProfile, sigma_w2: float, cfg: SystemConfig | None = None, sigma_x2: float = 1.0, coeffs: PdfCoefficients | None = None):
    """Log density of a signal-region component (V plus noise).

    `m` may be an integer in-symbol index (cfg required) or a TapRange (unit
    transmit variance assumed unless sigma_x2 or cfg says otherwise).
    Symmetric in y by construction: only |y| enters. Vectorized over y.
    """
    if sigma_w2 <= 0:
        raise ValueError("sigma_w2 must be positive")
    if coeffs is None:
        if cfg is not None:
            sigma_x2 = cfg.sigma_x2
        coeffs = pdf_coefficients(_resolve_range(m, cfg), pdp, sigma_x2)
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    u = np.abs(np.atleast_1d(y)) / math.sqrt(sigma_w2)
    log_terms = _log_brackets(u, coeffs, sigma_w2)
    out, sign = logsumexp(log_terms, axis=0, b=coeffs.weights[:, None], return_sign=True)
    if np.any(sign <= 0) or not np.all(np.isfinite(out)):
        raise NumericalFailure(
            "signed mixture collapsed to a non-positive or non-finite density"
        )
    return float(out[0]) if scalar else out


def log_pdf_v(v, m, pdp: PowerDelayProfile, cfg: SystemConfig | None = None, sigma_x2: float = 1.0, coeffs: PdfCoefficients | None = None):
    """Log density of the signal part V alone (no noise).

    V is the difference of two iid hypoexponential sums over the range's taps,
    so the density is a signed mixture of two-sided exponentials; a single tap
    gives the Laplace density (lam/2) exp(-lam |v|).
    """
    if coeffs is None:
        if cfg is not None:
            sigma_x2 = cfg.sigma_x2
        coeffs = pdf_coefficients(_resolve_range(m, cfg), pdp, sigma_x2)
    v = np.asarray(v, dtype=float)
    scalar = v.ndim == 0
    av = np.abs(np.atleast_1d(v))
    log_terms = -coeffs.lambdas[:, None] * av[None, :]
    out, sign = logsumexp(log_terms, axis=0, b=coeffs.weights[:, None], return_sign=True)
    if np.any(sign <= 0) or not np.all(np.isfinite(out)):
        raise NumericalFailure("signal-part density evaluated non-positive")
    return float(out[0]) if scalar else out


def sample_v(m, pdp: PowerDelayProfile, rng: np.random.Generator, cfg: SystemConfig | None = None, sigma_x2: float = 1.0, size=None):
    """Draw from the signal part V by its defining construction.

    One Exp(lam_l) minus an independent Exp(lam_l) per contributing tap,
    summed. Returns a float when size is None, else an ndarray.
    """
    if cfg is not None:
        sigma_x2 = cfg.sigma_x2
    taps = _resolve_range(m, cfg)
    lam = pdp.lambdas(sigma_x2)[taps.a : taps.b + 1]
    n = 1 if size is None else size
    out = np.zeros(n)
    for rate in lam:
        out += rng.exponential(1.0 / rate, size=n)
        out -= rng.exponential(1.0 / rate, size=n)
    return float(out[0]) if size is None else out


def component_variance(taps, pdp: PowerDelayProfile, sigma_x2: float, sigma_w2: float) -> float:
    """Per-component variance sigma_w^2/2 + sigma_x^2/2 * sum of tap variances.

    This is the exact second moment of the signal-region density, and the
    variance used by the Gaussian-approximation baseline.
    """
    if taps is NOISE_ONLY:
        return sigma_w2 / 2.0
    v = sum(pdp.variances[taps.a : taps.b + 1])
    return sigma_w2 / 2.0 + 0.5 * sigma_x2 * v
