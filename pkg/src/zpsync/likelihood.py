"""Periodic per-index PDF tables and window log-likelihood scoring.

A window sample landing at stream position p belongs to the in-symbol index
p mod n_s, and positions before the stream start are pure noise. All indices
sharing one delay-tap range share one density, so a table holds one evaluator
per distinct class instead of one per index. Scoring a hypothesis d is then a
gather over a precomputed (class x sample) matrix of log densities.

Densities factor over I and Q: a complex sample contributes the real-part
log density of its real and imaginary parts, summed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import logsumexp

from .analytic_pdf import (
    NOISE_ONLY,
    PdfCoefficients,
    component_variance,
    log_pdf_noise,
    log_pdf_signal,
    pdf_coefficients,
    sample_v,
    tap_range,
)
from .config import PowerDelayProfile, SystemConfig
from .errors import ConfigError, NumericalFailure
from .signal_sim import ObservationWindow

_GRID_PITCH_DIVISOR = 16.0   # grid pitch target: sigma_w / 16
_GRID_PITCH_LIMIT = 4.0      # give up on grids coarser than sigma_w / 4
_MIN_GRID = 1024
_MAX_GRID_ONE_SIDED = 16384
_MAX_GRID_TWO_SIDED = 32768
_MCS_GRID_MIN_SAMPLES = 64
_LSE_CHUNK = 512
_LOG_FLOOR = 1e-300


class TableMode(str, Enum):
    ANALYTIC = "analytic"
    MCS = "mcs"
    GAUSSIAN_APPROX = "gaussian"


def _pick_grid(span: float, sigma_w2: float, max_points: int) -> int | None:
    """Number of grid points for a span, or None when the kernel width
    cannot be resolved within the point budget."""
    sw = math.sqrt(sigma_w2)
    pitch = sw / _GRID_PITCH_DIVISOR
    points = 1 << max(0, math.ceil(math.log2(max(span / pitch, 1.0))))
    points = min(max(points, _MIN_GRID), max_points)
    if span / points > sw / _GRID_PITCH_LIMIT:
        return None
    return points


class _NoisePdf:
    """Exact closed-form noise branch."""

    def __init__(self, sigma_w2: float):
        self.sigma_w2 = sigma_w2

    def __call__(self, y):
        return log_pdf_noise(y, self.sigma_w2)


class _GaussianClassPdf:
    """Zero-mean Gaussian stand-in with the class's exact second moment."""

    def __init__(self, variance: float):
        self.variance = variance
        self._const = -0.5 * math.log(2.0 * math.pi * variance)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = -y * y / (2.0 * self.variance) + self._const
        return out if out.ndim else float(out)


class _AnalyticClassPdf:
    """Theorem-density class evaluator, grid-interpolated on |y| when built
    with a grid, exact elsewhere (the density is symmetric)."""

    def __init__(self, coeffs: PdfCoefficients, sigma_w2: float, std: float, grid: bool):
        self.coeffs = coeffs
        self.sigma_w2 = sigma_w2
        self.grid_u = None
        self.grid_logf = None
        if grid:
            span = 10.0 * std
            points = _pick_grid(span, sigma_w2, _MAX_GRID_ONE_SIDED)
            if points is not None:
                self.grid_u = np.linspace(0.0, span, points)
                self.grid_logf = self._exact(self.grid_u)

    def _exact(self, y):
        return log_pdf_signal(y, None, None, self.sigma_w2, coeffs=self.coeffs)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        u = np.abs(np.atleast_1d(y))
        if self.grid_u is None:
            out = self._exact(u)
        else:
            out = np.interp(u, self.grid_u, self.grid_logf)
            far = u > self.grid_u[-1]
            if far.any():
                out[far] = self._exact(u[far])
        return float(out[0]) if scalar else out


class _McsClassPdf:
    """Kernel average over stored signal-part draws (one Gaussian kernel of
    variance sigma_w2/2 per draw), optionally binned onto a grid and
    convolved once so lookups are O(1)."""

    def __init__(self, samples: np.ndarray, sigma_w2: float, grid: bool):
        self.samples = np.asarray(samples, dtype=float)
        self.sigma_w2 = sigma_w2
        self._const = -math.log(len(self.samples)) - 0.5 * math.log(math.pi * sigma_w2)
        self._sorted = np.sort(self.samples)
        self.grid_x = None
        self.grid_logf = None
        if grid and len(self.samples) >= _MCS_GRID_MIN_SAMPLES:
            self._build_grid()

    def _build_grid(self):
        sw = math.sqrt(self.sigma_w2)
        lo = self.samples.min() - 30.0 * sw
        hi = self.samples.max() + 30.0 * sw
        points = _pick_grid(hi - lo, self.sigma_w2, _MAX_GRID_TWO_SIDED)
        if points is None:
            return
        x = np.linspace(lo, hi, points)
        pitch = x[1] - x[0]
        # linear binning: each draw split between its two bracketing bins
        pos = (self.samples - lo) / pitch
        left = np.clip(pos.astype(int), 0, points - 2)
        frac = pos - left
        hist = np.bincount(left, weights=1.0 - frac, minlength=points)
        hist += np.bincount(left + 1, weights=frac, minlength=points)
        reach = int(math.ceil(26.5 * sw / pitch))
        t = np.arange(-reach, reach + 1) * pitch
        kernel = np.exp(-t * t / self.sigma_w2)
        dens = fftconvolve(hist, kernel, mode="same")
        # the FFT leaves a roundoff floor ~1e-16 of the peak; in deep-tail
        # bins the true value sits far below it, so redo those bins with a
        # windowed direct sum (immune to cross-bin cancellation)
        suspect = np.flatnonzero(dens <= dens.max() * 1e-10)
        if suspect.size:
            padded = np.concatenate([np.zeros(reach), hist, np.zeros(reach)])
            offsets = np.arange(2 * reach + 1)
            for start in range(0, suspect.size, 4096):
                rows = suspect[start : start + 4096]
                dens[rows] = padded[rows[:, None] + offsets[None, :]] @ kernel
        dens /= len(self.samples) * math.sqrt(math.pi * self.sigma_w2)
        logf = np.log(np.maximum(dens, _LOG_FLOOR))
        # bins beyond kernel reach of every draw underflow outright; give
        # them the exact sum so dead zones are not overvalued
        dead = np.flatnonzero(dens <= 0.0)
        if dead.size:
            logf[dead] = self._exact(x[dead])
        self.grid_x = x
        self.grid_logf = logf

    def _exact(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        draws = self._sorted
        n = len(draws)
        if n <= _LSE_CHUNK:
            return self._exact_full(y, draws) + self._const
        # draws beyond this radius of a query together contribute less than
        # e^-50 of its nearest kernel, invisible in double precision, so the
        # sum can be restricted to a window around the query
        j = np.searchsorted(draws, y)
        d_lo = np.where(j > 0, y - draws[np.maximum(j - 1, 0)], np.inf)
        d_hi = np.where(j < n, draws[np.minimum(j, n - 1)] - y, np.inf)
        d_near = np.minimum(d_lo, d_hi)
        radius = np.sqrt(d_near * d_near + self.sigma_w2 * (math.log(n) + 50.0))
        a = np.searchsorted(draws, y - radius, side="left")
        b = np.searchsorted(draws, y + radius, side="right")
        out = np.empty(len(y))
        narrow = (b - a) <= _LSE_CHUNK
        if narrow.any():
            idx = a[narrow, None] + np.arange(_LSE_CHUNK)[None, :]
            block = y[narrow, None] - draws[np.minimum(idx, n - 1)]
            z = -block * block / self.sigma_w2
            z[idx >= b[narrow, None]] = -np.inf
            out[narrow] = logsumexp(z, axis=1)
        wide = ~narrow
        if wide.any():
            out[wide] = self._exact_full(y[wide], draws)
        return out + self._const

    def _exact_full(self, y, draws):
        out = np.empty(len(y))
        for start in range(0, len(y), _LSE_CHUNK):
            block = y[start : start + _LSE_CHUNK, None] - draws[None, :]
            out[start : start + _LSE_CHUNK] = logsumexp(
                -block * block / self.sigma_w2, axis=1
            )
        return out

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        v = np.atleast_1d(y).astype(float)
        if self.grid_x is None:
            out = self._exact(v)
        else:
            out = np.interp(v, self.grid_x, self.grid_logf)
            far = (v < self.grid_x[0]) | (v > self.grid_x[-1])
            if far.any():
                out[far] = self._exact(v[far])
        return float(out[0]) if scalar else out


class _IqPdf:
    """Complex-argument wrapper: log f(y) = log f_I(Re y) + log f_Q(Im y)."""

    def __init__(self, real_pdf):
        self.real_pdf = real_pdf

    def __call__(self, y):
        y = np.asarray(y)
        return self.real_pdf(y.real) + self.real_pdf(y.imag)


@dataclass(frozen=True)
class PdfTable:
    """Immutable per-period density table.

    per_index[m] is the complex-argument evaluator for in-symbol index m;
    indices past the delay spread alias the noise_only object itself.
    """

    mode: TableMode
    n_s: int
    class_of_index: np.ndarray          # (n_s,) int ids, 0 is the noise class
    class_ranges: tuple                 # per class: NOISE_ONLY or a TapRange
    evaluators: tuple                   # per class: real-argument log density
    per_index: tuple = field(init=False)
    noise_only: _IqPdf = field(init=False)

    def __post_init__(self):
        iq = tuple(_IqPdf(ev) for ev in self.evaluators)
        object.__setattr__(self, "noise_only", iq[0])
        object.__setattr__(
            self, "per_index", tuple(iq[k] for k in self.class_of_index)
        )

    @property
    def n_classes(self) -> int:
        return len(self.evaluators)

    def class_ids_for(self, n_win: int, d: int) -> np.ndarray:
        """Class id of every window sample under hypothesis d."""
        pos = np.arange(n_win) + d
        ids = self.class_of_index[pos % self.n_s]
        ids[pos < 0] = 0
        return ids

    def complex_contributions(self, samples: np.ndarray) -> np.ndarray:
        """Matrix [class, sample] of per-complex-sample log densities."""
        samples = np.asarray(samples)
        out = np.empty((self.n_classes, len(samples)))
        for k, ev in enumerate(self.evaluators):
            out[k] = ev(samples.real) + ev(samples.imag)
        return out


def build_pdf_table(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    sigma_w2: float,
    mode: TableMode | str,
    rng: np.random.Generator | None = None,
    mcs_samples: int | None = None,
    grid: bool = True,
) -> PdfTable:
    """Construct the periodic table for one (config, profile, noise) triple.

    Mcs mode draws one pool of per-tap signal realizations and assembles each
    class's stored samples from it, so two builds from the same seed store
    identical draws.
    """
    mode = TableMode(mode)
    if sigma_w2 <= 0:
        raise ValueError("sigma_w2 must be positive")
    if pdp.n_taps != cfg.n_h:
        raise ConfigError(f"profile has {pdp.n_taps} taps, config expects {cfg.n_h}")
    pool_cum = None
    ranges = [NOISE_ONLY]
    ids = {}
    class_of_index = np.zeros(cfg.n_s, dtype=int)
    for m in range(cfg.n_s):
        taps = tap_range(m, cfg)
        if taps is NOISE_ONLY:
            continue
        if taps not in ids:
            ids[taps] = len(ranges)
            ranges.append(taps)
        class_of_index[m] = ids[taps]

    if mode is TableMode.MCS:
        if rng is None:
            raise ValueError("Mcs mode needs an rng to draw its stored samples")
        n_draws = cfg.mcs_samples if mcs_samples is None else int(mcs_samples)
        if n_draws < 1:
            raise ValueError("Mcs mode needs at least one stored sample")

    evaluators = [_NoisePdf(sigma_w2)]
    for taps in ranges[1:]:
        if mode is TableMode.ANALYTIC:
            coeffs = pdf_coefficients(taps, pdp, cfg.sigma_x2)
            std = math.sqrt(component_variance(taps, pdp, cfg.sigma_x2, sigma_w2))
            evaluators.append(_AnalyticClassPdf(coeffs, sigma_w2, std, grid))
        elif mode is TableMode.GAUSSIAN_APPROX:
            var = component_variance(taps, pdp, cfg.sigma_x2, sigma_w2)
            evaluators.append(_GaussianClassPdf(var))
        else:
            # one pool of per-tap realizations feeds every class: a class
            # stores the pool summed over its own tap range, leaving its
            # marginal law untouched while neighboring classes share kernels,
            # so Monte Carlo noise largely cancels out of score differences
            if pool_cum is None:
                pool = np.empty((cfg.n_h, n_draws))
                for l, rate in enumerate(pdp.lambdas(cfg.sigma_x2)):
                    pool[l] = rng.exponential(1.0 / rate, n_draws)
                    pool[l] -= rng.exponential(1.0 / rate, n_draws)
                pool_cum = np.vstack([np.zeros(n_draws), np.cumsum(pool, axis=0)])
            draws = pool_cum[taps.b + 1] - pool_cum[taps.a]
            evaluators.append(_McsClassPdf(draws, sigma_w2, grid))

    return PdfTable(
        mode=mode,
        n_s=cfg.n_s,
        class_of_index=class_of_index,
        class_ranges=tuple(ranges),
        evaluators=tuple(evaluators),
    )


@dataclass(frozen=True)
class HypothesisScores:
    d_values: tuple
    log_like: np.ndarray
    argmax_d: int

    def __post_init__(self):
        best = np.max(self.log_like)
        winners = [d for d, s in zip(self.d_values, self.log_like) if s == best]
        if self.argmax_d != min(winners):
            raise ValueError("argmax_d must be the smallest maximizing hypothesis")


def _window_samples(window, n_s: int) -> np.ndarray:
    samples = window.samples if isinstance(window, ObservationWindow) else np.asarray(window)
    if len(samples) == 0 or len(samples) % n_s:
        raise ValueError(
            f"window length {len(samples)} is not a positive multiple of n_s={n_s}"
        )
    return samples


def _check_hypothesis(d: int, n_s: int) -> int:
    d = int(d)
    if not (-n_s + 1 <= d <= n_s - 1):
        raise ValueError(f"hypothesis d={d} outside [-(n_s-1), n_s-1]")
    return d


def log_likelihood(window, d: int, table: PdfTable) -> float:
    """Joint log density of the window under hypothesis d.

    Sample i is scored with the noise density when i + d < 0 and with
    per_index[(i + d) mod n_s] otherwise, which reproduces the head, body,
    and tail partial products of the direct formulation for either sign.
    """
    d = _check_hypothesis(d, table.n_s)
    samples = _window_samples(window, table.n_s)
    ids = table.class_ids_for(len(samples), d)
    total = 0.0
    for k in range(table.n_classes):
        mask = ids == k
        if mask.any():
            ev = table.evaluators[k]
            part = np.sum(ev(samples.real[mask])) + np.sum(ev(samples.imag[mask]))
            total += float(part)
    if math.isnan(total):
        raise NumericalFailure("log-likelihood accumulated a NaN")
    return total


def score_all(window, table: PdfTable, d_range) -> HypothesisScores:
    """Scores for every hypothesis, ties broken toward the smallest d."""
    d_values = sorted({_check_hypothesis(d, table.n_s) for d in d_range})
    if not d_values:
        raise ValueError("empty hypothesis range")
    samples = _window_samples(window, table.n_s)
    contrib = table.complex_contributions(samples)
    cols = np.arange(len(samples))
    scores = np.empty(len(d_values))
    for j, d in enumerate(d_values):
        scores[j] = contrib[table.class_ids_for(len(samples), d), cols].sum()
    if np.isnan(scores).any():
        raise NumericalFailure("log-likelihood accumulated a NaN")
    return HypothesisScores(
        d_values=tuple(d_values),
        log_like=scores,
        argmax_d=int(d_values[int(np.argmax(scores))]),
    )


def write_likelihood_trace(scores: HypothesisScores, path) -> None:
    """Per-hypothesis trace, one row per d."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["d", "log_likelihood"])
        for d, val in zip(scores.d_values, scores.log_like):
            writer.writerow([d, repr(float(val))])
