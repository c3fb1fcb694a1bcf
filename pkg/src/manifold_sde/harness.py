"""Monte Carlo estimation of E[ int_0^T g(X_s, s) ds + f(X_T, T) ] on a manifold.

Paths evolve on a uniform grid h = T / n_div.  Path i draws all of its noise
from the counter-based stream (seed, stream_id=i): one block of n_div
increments up front, then any retry draws in failure order.  That makes the
estimate bit-identical for a fixed config no matter how paths are chunked or
how many worker threads run, and lets a single path be replayed in isolation.

The running cost is accumulated as sum_j g(X_{j+1}, j h) * h (the post-step
point with the pre-step time, matching the reference loop order), plus the
terminal f(X_T, T).  Costs act on the functional representation of the state
(identity except for Grassmann, where points are presented as projectors).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .geometry import ManifoldHandle, SdeSpec, require_on_manifold
from .integrators import (
    INTEGRATOR_IDS,
    StepFailureError,
    Stepper,
    WienerIncrement,
    make_stepper,
    truncation_bound,
)
from .rng import RngStream

THREADS_ENV = "MANIFOLD_SDE_THREADS"


@dataclass(frozen=True)
class SimulationConfig:
    """Inputs of one Monte Carlo run; h = T / n_div."""

    T: float
    n_div: int
    n_path: int
    seed: int
    integrator: str = "ito-em"
    r: float = 1.0
    diffusion: float = 0.5
    max_retries: int = 5
    path_chunk: int = 256
    state_cap: float | None = None
    manifold: str | None = None
    manifold_params: dict = field(default_factory=dict)
    cost: str | None = None

    def __post_init__(self):
        if self.T <= 0.0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.n_div < 1 or self.n_path < 1:
            raise ValueError("n_div and n_path must be at least 1")
        if self.integrator not in INTEGRATOR_IDS:
            raise ValueError(
                f"unknown integrator {self.integrator!r}; valid ids: "
                f"{', '.join(INTEGRATOR_IDS)}"
            )
        if self.r < 1.0:
            raise ValueError(f"truncation parameter r must be >= 1, got {self.r}")
        if self.diffusion <= 0.0:
            raise ValueError(f"diffusion must be positive, got {self.diffusion}")
        if self.max_retries < 0 or self.path_chunk < 1:
            raise ValueError("max_retries must be >= 0 and path_chunk >= 1")

    @property
    def h(self) -> float:
        return self.T / self.n_div


@dataclass(frozen=True)
class CostFunctional:
    """Running + terminal costs; either slot may be None (treated as zero).

    Both callables receive (points, t) with points batched over a leading
    axis, and must return one value per point.
    """

    running: Callable | None = None
    terminal: Callable | None = None
    name: str = ""


@dataclass(frozen=True)
class SampleSet:
    """Per-path accumulated samples with summary statistics.

    ``samples`` holds NaN at divergent paths (state-norm cap exceeded);
    those are excluded from the mean/stderr and listed in ``divergent``.
    """

    samples: np.ndarray
    divergent: tuple = ()

    @property
    def n_path(self) -> int:
        return int(self.samples.shape[0])

    @property
    def valid(self) -> np.ndarray:
        return self.samples[np.isfinite(self.samples)]

    @property
    def mean(self) -> float:
        return float(np.mean(self.valid))

    @property
    def stderr(self) -> float:
        v = self.valid
        if v.size < 2:
            return float("nan")
        return float(np.std(v, ddof=1) / np.sqrt(v.size))


def _worker_count(n_chunks: int) -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip()
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 0:
        cap = 0
    auto = min(n_chunks, os.cpu_count() or 1)
    return max(1, min(cap, n_chunks) if cap else auto)


def _sub_increment(inc: WienerIncrement, idx: np.ndarray) -> WienerIncrement:
    return WienerIncrement(
        raw=inc.raw[idx], truncated=inc.truncated[idx], h=inc.h, r=inc.r
    )


def _run_chunk(handle: ManifoldHandle, stepper: Stepper, config: SimulationConfig,
               cost: CostFunctional, x0: np.ndarray, lo: int, hi: int):
    """Advance paths [lo, hi); returns (samples, divergent local indices)."""
    size = hi - lo
    h = config.h
    noise = stepper.noise_shape
    if stepper.uses_truncation:
        bound = truncation_bound(h, config.r)
    else:
        bound = None  # normalized moves ignore the clamp entirely
    streams = [RngStream(seed=config.seed, stream_id=i) for i in range(lo, hi)]
    blocks = np.stack([s.normal((config.n_div,) + noise) for s in streams], axis=1)

    state = np.broadcast_to(x0, (size,) + handle.shape).astype(float).copy()
    acc = np.zeros(size)
    alive = np.ones(size, dtype=bool)

    for j in range(config.n_div):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        t = j * h
        raw = blocks[j, idx]
        zeta = np.clip(raw, -bound, bound) if bound is not None else raw
        inc = WienerIncrement(raw=raw, truncated=zeta, h=h, r=config.r)
        out = stepper.step(state[idx], t, h, inc)
        ok = np.asarray(out.ok)
        state[idx[ok]] = out.state[ok]

        attempts = 0
        pending = idx[~ok]
        while pending.size:
            attempts += 1
            if attempts > config.max_retries:
                raise StepFailureError(
                    f"{handle.name}: path {lo + int(pending[0])} failed step {j} "
                    f"(t={t:.6g}) after {config.max_retries} retries"
                )
            raw = np.stack([streams[i].normal(noise) for i in pending])
            zeta = np.clip(raw, -bound, bound) if bound is not None else raw
            inc = WienerIncrement(raw=raw, truncated=zeta, h=h, r=config.r)
            out = stepper.step(state[pending], t, h, inc)
            ok = np.asarray(out.ok)
            state[pending[ok]] = out.state[ok]
            pending = pending[~ok]

        if config.state_cap is not None:
            norms = np.sqrt(np.sum(state[idx] ** 2, axis=(-2, -1)))
            blown = idx[norms > config.state_cap]
            alive[blown] = False
            idx = idx[norms <= config.state_cap]

        if cost.running is not None and idx.size:
            pts = handle.functional_point(state[idx])
            acc[idx] += h * np.asarray(cost.running(pts, t), dtype=float)

    live = np.nonzero(alive)[0]
    if cost.terminal is not None and live.size:
        pts = handle.functional_point(state[live])
        acc[live] += np.asarray(cost.terminal(pts, config.T), dtype=float)
    acc[~alive] = np.nan
    return acc, tuple(int(i) for i in np.nonzero(~alive)[0])


def simulate(config: SimulationConfig, handle: ManifoldHandle,
             sde: SdeSpec | None = None, cost: CostFunctional | None = None,
             x0: np.ndarray | None = None) -> SampleSet:
    """Run n_path independent paths and accumulate the cost functional.

    ``sde`` defaults to the Brownian motion with generator scale
    config.diffusion, in the form the chosen integrator consumes.  ``x0``
    defaults to the handle's canonical point.
    """
    cost = cost if cost is not None else CostFunctional()
    stepper = make_stepper(handle, config.integrator, sde=sde, diffusion=config.diffusion)
    x0 = handle.default_point() if x0 is None else np.asarray(x0, dtype=float)
    require_on_manifold(handle, x0, tol=1e-8)

    chunks = [
        (lo, min(lo + config.path_chunk, config.n_path))
        for lo in range(0, config.n_path, config.path_chunk)
    ]
    samples = np.empty(config.n_path)
    divergent: list[int] = []

    def run(span):
        return _run_chunk(handle, stepper, config, cost, x0, span[0], span[1])

    workers = _worker_count(len(chunks))
    if workers <= 1:
        results = [run(span) for span in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    for (lo, hi), (acc, div) in zip(chunks, results):
        samples[lo:hi] = acc
        divergent.extend(lo + d for d in div)
    return SampleSet(samples=samples, divergent=tuple(sorted(divergent)))


# ---------------------------------------------------------------------------
# cross-scheme comparison grids


@dataclass(frozen=True)
class ComparisonCell:
    integrator: str
    n_div: int
    mean: float
    stderr: float
    n_path: int


@dataclass(frozen=True)
class ComparisonTable:
    """Per-cell estimates plus the worst pairwise discrepancy.

    ``consistent`` is True when every pair of cells differs by at most three
    combined standard errors.
    """

    cells: tuple
    worst_gap: float
    worst_allowance: float
    worst_pair: tuple
    consistent: bool

    def cell(self, integrator: str, n_div: int) -> ComparisonCell:
        for c in self.cells:
            if c.integrator == integrator and c.n_div == n_div:
                return c
        raise KeyError(f"no cell ({integrator}, {n_div})")


def _pairwise_consistency(cells: Sequence[ComparisonCell]):
    worst_ratio = -1.0
    worst = (0.0, float("inf"), ("", ""))
    consistent = True
    for i in range(len(cells)):
        for k in range(i + 1, len(cells)):
            a, b = cells[i], cells[k]
            gap = abs(a.mean - b.mean)
            allowance = 3.0 * float(np.hypot(a.stderr, b.stderr))
            if gap > allowance:
                consistent = False
            ratio = gap / allowance if allowance > 0 else np.inf
            if ratio > worst_ratio:
                worst_ratio = ratio
                worst = (gap, allowance,
                         (f"{a.integrator}@{a.n_div}", f"{b.integrator}@{b.n_div}"))
    return worst[0], worst[1], worst[2], consistent


def compare_methods(config: SimulationConfig, handle: ManifoldHandle,
                    cost: CostFunctional,
                    integrators: Sequence[str] = ("ito-em", "strat-heun",
                                                  "geodesic-walk", "retractive-em"),
                    n_divs: Sequence[int] = (200, 500, 700),
                    x0: np.ndarray | None = None) -> ComparisonTable:
    """Estimate the same functional over an integrator x n_div grid.

    Every cell reuses the config's seed (per-path streams make the draws
    independent across cells only through the different block shapes; the
    pairwise check is conservative under common random numbers).
    """
    cells = []
    for integ in integrators:
        for nd in n_divs:
            cfg = replace(config, integrator=integ, n_div=int(nd))
            out = simulate(cfg, handle, cost=cost, x0=x0)
            cells.append(ComparisonCell(integrator=integ, n_div=int(nd),
                                        mean=out.mean, stderr=out.stderr,
                                        n_path=out.n_path))
    gap, allowance, pair, consistent = _pairwise_consistency(cells)
    return ComparisonTable(cells=tuple(cells), worst_gap=gap,
                           worst_allowance=allowance, worst_pair=pair,
                           consistent=consistent)


# ---------------------------------------------------------------------------
# long-time uniform limit


@dataclass(frozen=True)
class UniformLimitRow:
    cost_name: str
    brownian: SampleSet
    direct_mean: float
    direct_stderr: float

    @property
    def gap(self) -> float:
        return abs(self.brownian.mean - self.direct_mean)

    @property
    def allowance(self) -> float:
        return 3.0 * float(np.hypot(self.brownian.stderr, self.direct_stderr))

    @property
    def consistent(self) -> bool:
        return self.gap <= self.allowance


def uniform_limit_run(handle: ManifoldHandle, costs, T: float = 40.0,
                      n_path: int = 1000, n_div: int = 700, seed: int = 0,
                      integrator: str = "ito-em", diffusion: float = 0.5,
                      n_direct: int = 100_000) -> tuple:
    """Long-run Brownian estimates vs direct uniform sampling, per cost.

    ``costs`` is a sequence of (name, f) pairs with f acting on batched
    functional points.  Only compact families have a uniform limit; the
    direct estimates come from the independent samplers in oracles.
    """
    from .oracles import uniform_cost_estimate

    if not handle.compact:
        raise ValueError(f"{handle.name} is not compact; no uniform limit")
    rows = []
    config = SimulationConfig(T=T, n_div=n_div, n_path=n_path, seed=seed,
                              integrator=integrator, diffusion=diffusion)
    for k, (name, f) in enumerate(costs):
        cost = CostFunctional(terminal=lambda x, t, f=f: f(x), name=name)
        browny = simulate(config, handle, cost=cost)
        direct_rng = RngStream(seed=seed, stream_id=2**32 + k)
        dmean, dse = uniform_cost_estimate(handle, f, direct_rng, n_sample=n_direct)
        rows.append(UniformLimitRow(cost_name=name, brownian=browny,
                                    direct_mean=dmean, direct_stderr=dse))
    return tuple(rows)
