"""Monte Carlo exposure-time simulation for N-photon lithography.

A *bunch* is one prepared N-photon state. Exposure time is counted in
bunches, and a run completes when every required pixel has registered
``target_events`` N-fold same-pixel events.

* Boto model: the whole bunch lands on one pixel, so every bunch is an event.
* Steuernagel model: the N photons land independently and only an all-equal
  tuple counts as an event.

Pixel ``j`` of ``S`` sits at ``s_j = j - (S - 1)/2``. Under fringe weighting
with phase step ``theta`` the Boto pixel law is ``cos^2(N theta s)`` and the
Steuernagel joint law for ``(s_1..s_N)`` is ``cos^2(theta * sum(s_i))``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .biphoton import worker_count
from .errors import ExposureBudgetError
from .patterns import Model, as_model

UNIFORM = "uniform"


@dataclass(frozen=True)
class Fringe:
    theta: float


@dataclass(frozen=True)
class ExposureConfig:
    pixels: int
    N: int
    target_events: int = 1
    model: Model = Model.STEUERNAGEL
    weighting: object = UNIFORM
    seed: int = 0
    trials: int = 100
    node_threshold: float = 1e-3
    max_bunches: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", as_model(self.model))
        if self.pixels < 1 or self.N < 1 or self.target_events < 1 or self.trials < 1:
            raise ValueError("pixels, N, target_events and trials must all be >= 1")
        if not 0 <= self.node_threshold < 1:
            raise ValueError("node_threshold must lie in [0, 1)")
        if self.weighting != UNIFORM and not isinstance(self.weighting, Fringe):
            raise ValueError("weighting must be 'uniform' or Fringe(theta)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ExposureResult:
    mean_bunches: float
    std_error: float
    per_trial: np.ndarray
    config: ExposureConfig
    event_probabilities: np.ndarray
    required: np.ndarray
    coupon_factor: float
    fitted_exponent: float | None = None

    @property
    def event_rate(self) -> float:
        """Probability that a bunch produces an event on any pixel."""
        return float(self.event_probabilities.sum())

    @property
    def per_pixel_time(self) -> float:
        """Mean bunches with the coupon-collector inflation divided out.

        Equals ``M * n_required / Q`` in expectation, where ``Q`` is the
        per-bunch probability of an event on a required pixel.
        """
        return self.mean_bunches / self.coupon_factor


def pixel_coordinates(pixels: int) -> np.ndarray:
    return np.arange(pixels) - (pixels - 1) / 2


def _sum_distribution(pixels: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Number of N-tuples of pixels per value of ``sum(s_i)``."""
    counts = np.ones(1, dtype=float)
    for _ in range(N):
        counts = np.convolve(counts, np.ones(pixels))
    sums = np.arange(counts.size) - N * (pixels - 1) / 2
    return sums, counts


def event_probabilities(cfg: ExposureConfig) -> np.ndarray:
    """Per-bunch probability of an event on each pixel."""
    S, N = cfg.pixels, cfg.N
    s = pixel_coordinates(S)
    if cfg.weighting == UNIFORM:
        return np.full(S, 1.0 / S if cfg.model is Model.BOTO else float(S) ** -N)
    theta = cfg.weighting.theta
    w = np.cos(N * theta * s) ** 2
    if not w.max() > 1e-12:
        raise ValueError("every pixel sits on a fringe node; no event can ever occur")
    if cfg.model is Model.BOTO:
        return w / w.sum()
    sums, counts = _sum_distribution(S, N)
    return w / float(np.sum(counts * np.cos(theta * sums) ** 2))


def required_pixels(cfg: ExposureConfig, probs: np.ndarray | None = None) -> np.ndarray:
    """Indices of pixels that must complete; node pixels are dropped under fringe weighting."""
    probs = event_probabilities(cfg) if probs is None else probs
    if cfg.weighting == UNIFORM:
        return np.arange(cfg.pixels)
    return np.flatnonzero(probs >= cfg.node_threshold * probs.max())


def coupon_factor(probs: np.ndarray, required: np.ndarray, M: int) -> float:
    """Expected events to completion divided by ``M * len(required)``.

    ``probs`` are per-bunch event probabilities. Uses the Poissonized form
    ``E = int_0^inf [1 - prod_j P(Poisson(p_j t) >= M)] dt`` with ``p``
    the event-conditional pixel law. For M = 1 and uniform ``p`` this is
    the harmonic number ``H_n``.
    """
    p = np.asarray(probs, dtype=float)
    p = p / p.sum()
    pr = p[np.asarray(required)]
    t_end = (M + 60.0 + 12.0 * math.sqrt(M)) / pr.min()

    def integrand(t):
        return 1.0 - float(np.prod(special.gammainc(M, pr * t)))

    mean_t = M / pr.min()
    val1, _ = integrate.quad(integrand, 0.0, mean_t, limit=400, epsabs=0, epsrel=1e-12)
    val2, _ = integrate.quad(integrand, mean_t, t_end, limit=400, epsabs=0, epsrel=1e-12)
    return (val1 + val2) / (M * pr.size)


class _BunchSampler:
    """Draws bunches and reports the event pixel of each (``-1``: no event)."""

    def __init__(self, cfg: ExposureConfig):
        self.cfg = cfg
        self.s = pixel_coordinates(cfg.pixels)
        if cfg.model is Model.BOTO:
            p = event_probabilities(cfg)
            self.cdf = np.cumsum(p)
            self.cdf[-1] = 1.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        cfg = self.cfg
        if cfg.model is Model.BOTO:
            if cfg.pixels == 1:
                return np.zeros(n, dtype=np.int64)
            return np.searchsorted(self.cdf, rng.random(n), side="right").astype(np.int64)
        S, N = cfg.pixels, cfg.N
        if cfg.weighting == UNIFORM:
            tuples = rng.integers(0, S, size=(n, N))
        else:
            tuples = self._fringe_tuples(rng, n)
        hit = np.all(tuples == tuples[:, :1], axis=1)
        return np.where(hit, tuples[:, 0], -1)

    def _fringe_tuples(self, rng, n):
        # rejection sampling from the joint law cos^2(theta * sum s)
        S, N, theta = self.cfg.pixels, self.cfg.N, self.cfg.weighting.theta
        out = []
        have = 0
        while have < n:
            m = max(64, int(2.2 * (n - have)))
            cand = rng.integers(0, S, size=(m, N))
            keep = rng.random(m) < np.cos(theta * self.s[cand].sum(axis=1)) ** 2
            cand = cand[keep]
            out.append(cand)
            have += cand.shape[0]
        return np.concatenate(out)[:n]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent PCG64 substream for one trial, derived from ``(seed, trial)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _run_trial(cfg: ExposureConfig, sampler: _BunchSampler, required: np.ndarray, chunk: int,
               budget: int, trial: int) -> int:
    rng = trial_rng(cfg.seed, trial)
    need = np.zeros(cfg.pixels, dtype=np.int64)
    need[required] = cfg.target_events
    open_pixels = set(int(j) for j in required)
    done_at = 0
    offset = 0
    while open_pixels:
        if offset >= budget:
            raise ExposureBudgetError(
                f"trial {trial} exceeded {budget} bunches with {len(open_pixels)} pixel(s) incomplete; "
                "check node_threshold / weighting")
        n = min(chunk, budget - offset)
        ev = sampler.draw(rng, n)
        pos = np.flatnonzero(ev >= 0)
        pix = ev[pos]
        for j in sorted(open_pixels):
            hits = pos[pix == j]
            if hits.size >= need[j]:
                done_at = max(done_at, offset + int(hits[need[j] - 1]) + 1)
                need[j] = 0
                open_pixels.discard(j)
            else:
                need[j] -= hits.size
        offset += n
    return done_at


def expected_bunches_estimate(cfg: ExposureConfig) -> float:
    """Exact expected bunch count from the Poissonized coupon formula."""
    probs = event_probabilities(cfg)
    req = required_pixels(cfg, probs)
    return coupon_factor(probs, req, cfg.target_events) * cfg.target_events * req.size / probs.sum()


def simulate_exposure(cfg: ExposureConfig, *, threads: int | None = None) -> ExposureResult:
    """Run ``cfg.trials`` independent exposures; deterministic for a fixed seed.

    Trial ``i`` draws from its own substream of ``cfg.seed`` so the result
    does not depend on how trials are spread over threads.
    """
    probs = event_probabilities(cfg)
    req = required_pixels(cfg, probs)
    cf = coupon_factor(probs, req, cfg.target_events)
    expected = cf * cfg.target_events * req.size / probs.sum()
    chunk = int(min(max(1.25 * expected + 64, 64), 1 << 20))
    budget = cfg.max_bunches if cfg.max_bunches is not None else int(200 * expected + 1000)
    sampler = _BunchSampler(cfg)

    def run(i):
        return _run_trial(cfg, sampler, req, chunk, budget, i)

    workers = min(worker_count(threads), cfg.trials)
    if workers == 1:
        counts = [run(i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, range(cfg.trials)))
    per_trial = np.asarray(counts, dtype=np.int64)
    # integer sums are exact, so the mean does not depend on reduction order
    mean = int(per_trial.sum()) / per_trial.size
    if per_trial.size > 1:
        dev = np.sort((per_trial - mean) ** 2)
        se = math.sqrt(math.fsum(dev) / (per_trial.size - 1) / per_trial.size)
    else:
        se = 0.0
    return ExposureResult(mean, se, per_trial, cfg, probs, req, cf)


def sample_event_pixels(cfg: ExposureConfig, events: int, *, trial: int = 0) -> np.ndarray:
    """Pixel indices of the first ``events`` events (for checking the pixel law)."""
    sampler = _BunchSampler(cfg)
    rng = trial_rng(cfg.seed, trial)
    out = []
    have = 0
    rate = float(event_probabilities(cfg).sum())
    while have < events:
        ev = sampler.draw(rng, int(min(1 << 20, max(1024, 1.2 * (events - have) / rate))))
        ev = ev[ev >= 0]
        out.append(ev)
        have += ev.size
    return np.concatenate(out)[:events]


# --- exact oracle -----------------------------------------------------------

def markov_expected_bunches(probs, required, M: int = 1) -> float:
    """Expected bunches to completion from the absorbing chain on capped counts.

    States are the per-pixel event counts of the required pixels, capped at
    ``M``; the fully-capped state absorbs. Counts never decrease, so the
    transient block is triangular and is solved by back-substitution:
    ``E(x) = (1 + sum_j q_j E(x + e_j)) / sum_j q_j`` over incomplete ``j``.
    """
    q = np.asarray(probs, dtype=float)[np.asarray(required)]
    n = q.size
    if (M + 1) ** n > 2_000_000:
        raise ValueError("state space too large for the exact chain")

    @lru_cache(maxsize=None)
    def expect(state):
        open_ = [j for j in range(n) if state[j] < M]
        if not open_:
            return 0.0
        rate = math.fsum(q[j] for j in open_)
        acc = 1.0
        for j in open_:
            nxt = list(state)
            nxt[j] += 1
            acc += q[j] * expect(tuple(nxt))
        return acc / rate

    return expect((0,) * n)


def enumerate_event_probabilities(cfg: ExposureConfig) -> np.ndarray:
    """Per-pixel event probabilities by brute-force enumeration of the joint law."""
    import itertools

    S, N = cfg.pixels, cfg.N
    s = pixel_coordinates(S)
    if cfg.model is Model.BOTO:
        w = np.array([1.0 if cfg.weighting == UNIFORM else math.cos(N * cfg.weighting.theta * v) ** 2 for v in s])
        return w / w.sum()
    weight = {}
    for tup in itertools.product(range(S), repeat=N):
        if cfg.weighting == UNIFORM:
            weight[tup] = 1.0
        else:
            weight[tup] = math.cos(cfg.weighting.theta * sum(s[i] for i in tup)) ** 2
    Z = math.fsum(weight.values())
    return np.array([weight[(j,) * N] / Z for j in range(S)])


# --- scaling fit ------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    exponent_S: float | None
    exponent_N_base: float | None
    r_squared: float
    exponent_S_raw: float | None = None
    exponent_N_base_raw: float | None = None
    fixed_N: int | None = None
    fixed_S: int | None = None
    results: tuple = field(default=(), repr=False)


def _linfit(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit: predictor has zero variance")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def fit_scaling(results, *, normalized: bool = True) -> ScalingFit:
    """Fit ``log(time)`` against ``log(S)`` at fixed N and against ``N`` at fixed S.

    ``results`` is an iterable of ``(pixels, N, ExposureResult)``. With
    ``normalized=True`` (default) the fitted time is
    :attr:`ExposureResult.per_pixel_time`, which removes the slowly growing
    coupon-collector factor of the completion criterion; raw
    ``mean_bunches`` exponents are reported alongside. The S-sweep uses the
    N with the most distinct pixel counts (>= 3), the N-sweep the pixel
    count with the most distinct N (>= 3).
    """
    rows = [(int(S), int(N), r) for S, N, r in results]
    by_N, by_S = {}, {}
    for S, N, r in rows:
        by_N.setdefault(N, {})[S] = r
        by_S.setdefault(S, {})[N] = r
    s_groups = {N: g for N, g in by_N.items() if len(g) >= 3}
    n_groups = {S: g for S, g in by_S.items() if len(g) >= 3}
    if not s_groups and not n_groups:
        raise ValueError("insufficient data: need >= 3 pixel counts at one N or >= 3 N at one pixel count")

    def t(r, norm):
        return r.per_pixel_time if norm else r.mean_bunches

    r2s = []
    exp_S = exp_S_raw = exp_N = exp_N_raw = None
    fixed_N = fixed_S = None
    annotated = {}
    if s_groups:
        fixed_N = max(s_groups, key=lambda n: (len(s_groups[n]), -n))
        g = s_groups[fixed_N]
        xs = np.log(sorted(g))
        exp_S, r2 = _linfit(xs, [math.log(t(g[S], normalized)) for S in sorted(g)])
        exp_S_raw, _ = _linfit(xs, [math.log(t(g[S], False)) for S in sorted(g)])
        r2s.append(r2)
        for S in g:
            annotated[(S, fixed_N)] = replace(g[S], fitted_exponent=exp_S)
    if n_groups:
        fixed_S = max(n_groups, key=lambda s: (len(n_groups[s]), -s))
        g = n_groups[fixed_S]
        ns = sorted(g)
        slope, r2 = _linfit(ns, [math.log(t(g[N], normalized)) for N in ns])
        slope_raw, _ = _linfit(ns, [math.log(t(g[N], False)) for N in ns])
        exp_N, exp_N_raw = math.exp(slope), math.exp(slope_raw)
        r2s.append(r2)
    out = tuple((S, N, annotated.get((S, N), r)) for S, N, r in rows)
    return ScalingFit(exp_S, exp_N, min(r2s), exp_S_raw, exp_N_raw, fixed_N, fixed_S, out)
