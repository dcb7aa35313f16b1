"""Integer timing-offset estimators: exhaustive ML, golden-section ML, and
the two baselines (power-transition metric, Gaussian-approximation ML)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from time import perf_counter

import numpy as np

from .config import PowerDelayProfile, SystemConfig
from .errors import ConfigError
from .likelihood import PdfTable, TableMode, build_pdf_table, log_likelihood, score_all
from .signal_sim import ObservationWindow

_GOLDEN_RATIO_STEP = 0.381966


class Method(str, Enum):
    ML_EXHAUSTIVE = "ml"
    ML_GOLDEN = "ml-golden"
    MCS_EXHAUSTIVE = "mcs"
    MCS_GOLDEN = "mcs-golden"
    TRANSITION_METRIC = "tm"
    GAUSSIAN_ML = "gaussian-ml"


_EXHAUSTIVE_BY_MODE = {
    TableMode.ANALYTIC: Method.ML_EXHAUSTIVE,
    TableMode.MCS: Method.MCS_EXHAUSTIVE,
    TableMode.GAUSSIAN_APPROX: Method.GAUSSIAN_ML,
}
_GOLDEN_BY_MODE = {
    TableMode.ANALYTIC: Method.ML_GOLDEN,
    TableMode.MCS: Method.MCS_GOLDEN,
    TableMode.GAUSSIAN_APPROX: Method.GAUSSIAN_ML,
}


@dataclass(frozen=True)
class EstimateResult:
    d_hat: int
    evaluations: int
    elapsed: float
    method: Method
    scores: dict = field(repr=False, default_factory=dict)  # hypothesis -> metric

    def __post_init__(self):
        if self.scores and self.evaluations != len(self.scores):
            raise ValueError("evaluation count disagrees with the recorded scores")
        if self.scores and self.d_hat not in self.scores:
            raise ValueError("d_hat was never evaluated")


def _hypothesis_range(window, n_s: int, d_range) -> list[int]:
    if d_range is not None:
        values = sorted(int(d) for d in d_range)
    elif isinstance(window, ObservationWindow) and window.cfg is not None:
        lo, hi = window.cfg.to_range
        values = list(range(lo, hi + 1))
    else:
        values = list(range(-n_s + 1, n_s))
    if not values:
        raise ValueError("empty hypothesis range")
    return values


def ml_exhaustive(window, table: PdfTable, d_range=None) -> EstimateResult:
    """Score every hypothesis and take the argmax (smallest d on ties)."""
    start = perf_counter()
    values = _hypothesis_range(window, table.n_s, d_range)
    scores = score_all(window, table, values)
    return EstimateResult(
        d_hat=scores.argmax_d,
        evaluations=len(values),
        elapsed=perf_counter() - start,
        method=_EXHAUSTIVE_BY_MODE[table.mode],
        scores=dict(zip(scores.d_values, scores.log_like.tolist())),
    )


def _golden_argmax(score_fn, init: int, last: int, rng: np.random.Generator):
    """Golden-section argmax over the integer interval [init, last].

    Phase one evaluates the first golden probe and, while it scores below
    either endpoint, removes it from the candidate set and redraws uniformly;
    once only two candidates remain the better endpoint wins outright (the
    comparison favors `last` on an exact tie, as the escape branch is
    written). Phase two shrinks the bracket with ratio-placed probes until it
    is narrower than 4, then sweeps it. Scores are memoized, so no hypothesis
    is ever evaluated twice.
    """
    memo: dict[int, float] = {}

    def ell(d: int) -> float:
        if d not in memo:
            memo[d] = score_fn(d)
        return memo[d]

    candidates = set(range(init, last + 1))
    c = init + math.floor(_GOLDEN_RATIO_STEP * (last - init))
    while ell(c) < ell(init) or ell(c) < ell(last):
        if len(candidates) == 2:
            d_hat = init if ell(init) > ell(last) else last
            return d_hat, memo
        candidates.discard(c)
        pool = sorted(candidates)
        c = pool[rng.integers(len(pool))]
    while last - init >= 4:
        if last - c >= c - init:
            d = c + math.floor(_GOLDEN_RATIO_STEP * (last - init))
            if ell(d) < ell(c):
                last = d
            else:
                init, c = c, d
        else:
            d = c - math.floor(_GOLDEN_RATIO_STEP * (last - init))
            if ell(d) < ell(c):
                init = d
            else:
                last, c = c, d
    sweep = [ell(d) for d in range(init, last + 1)]
    d_hat = init + int(np.argmax(sweep))
    return d_hat, memo


def ml_golden(window, table: PdfTable, rng: np.random.Generator, d_range=None) -> EstimateResult:
    """Iterative ML search; exact on unimodal score vectors, cheaper than the
    sweep elsewhere."""
    start = perf_counter()
    values = _hypothesis_range(window, table.n_s, d_range)
    if values != list(range(values[0], values[-1] + 1)):
        raise ValueError("golden-section search needs a contiguous hypothesis range")
    d_hat, memo = _golden_argmax(
        lambda d: log_likelihood(window, d, table), values[0], values[-1], rng
    )
    return EstimateResult(
        d_hat=d_hat,
        evaluations=len(memo),
        elapsed=perf_counter() - start,
        method=_GOLDEN_BY_MODE[table.mode],
        scores=memo,
    )


def mcs_table(
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    sigma_w2: float,
    L: int,
    rng: np.random.Generator,
) -> PdfTable:
    """Density table whose evaluators average L stored Gaussian kernels."""
    return build_pdf_table(cfg, pdp, sigma_w2, TableMode.MCS, rng=rng, mcs_samples=L)


def transition_metric(window, cfg: SystemConfig | None = None, d_range=None) -> EstimateResult:
    """Power-transition baseline: ratio of data-position power to ISI-free
    guard-position power under each hypothesis, argmax over d."""
    start = perf_counter()
    if cfg is None:
        cfg = window.cfg
    if cfg.n_z < cfg.n_h:
        raise ConfigError(
            "transition metric needs at least one ISI-free guard position (n_z >= n_h)"
        )
    values = _hypothesis_range(window, cfg.n_s, d_range)
    samples = window.samples if isinstance(window, ObservationWindow) else np.asarray(window)
    power = np.abs(samples) ** 2
    idx = np.arange(len(samples))
    ratios = np.empty(len(values))
    for j, d in enumerate(values):
        pos = idx + d
        m = pos % cfg.n_s
        data = (pos >= 0) & (m < cfg.n_x)
        quiet = (pos < 0) | (m >= cfg.n_x + cfg.n_h - 1)
        ratios[j] = power[data].mean() / (power[quiet].mean() + 1e-12)
    d_hat = values[int(np.argmax(ratios))]
    return EstimateResult(
        d_hat=d_hat,
        evaluations=len(values),
        elapsed=perf_counter() - start,
        method=Method.TRANSITION_METRIC,
        scores=dict(zip(values, ratios.tolist())),
    )


def gaussian_ml(
    window,
    cfg: SystemConfig,
    pdp: PowerDelayProfile,
    sigma_w2: float,
    d_range=None,
) -> EstimateResult:
    """ML with the per-index density replaced by a Gaussian of matching
    variance; the noise region keeps its exact density."""
    start = perf_counter()
    table = build_pdf_table(cfg, pdp, sigma_w2, TableMode.GAUSSIAN_APPROX)
    values = _hypothesis_range(window, table.n_s, d_range)
    scores = score_all(window, table, values)
    return EstimateResult(
        d_hat=scores.argmax_d,
        evaluations=len(values),
        elapsed=perf_counter() - start,
        method=Method.GAUSSIAN_ML,
        scores=dict(zip(scores.d_values, scores.log_like.tolist())),
    )


def is_unimodal(values) -> bool:
    """Strictly increasing to a single peak, then strictly decreasing."""
    v = np.asarray(values, dtype=float)
    k = int(np.argmax(v))
    return bool(np.all(np.diff(v[: k + 1]) > 0) and np.all(np.diff(v[k:]) < 0))
