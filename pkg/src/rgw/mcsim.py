"""Monte Carlo simulation of the branching process in a random environment,
plus the exact finite-horizon distribution it is validated against.

The defining feature of the random-environment model: one offspring law is
drawn per time step and shared by every individual alive in that step (the
individuals stay conditionally independent).  Trials run in fixed-size
blocks, each with its own counter-based Philox stream keyed by (seed, block
index), so the histogram is reproducible bit-for-bit regardless of how many
worker threads are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import EnvMeasure, QuadUniform
from .series import TruncSeries, averaged_compose

DEFAULT_CAP = 10 ** 6
BLOCK = 1 << 13


class SimConfig:
    """Simulation parameters; the measure is normalized internally for
    sampling (total mass is a free scale of the model).

    Admissibility is a property of the limit theory, not of the process
    itself, so degenerate environments (say, the pure single-birth law) are
    legal here.
    """

    __slots__ = ("measure", "horizon", "trials", "seed", "cap", "threads")

    def __init__(self, measure: EnvMeasure, horizon: int, trials: int,
                 seed: int = 0, cap: int = DEFAULT_CAP, threads: int = 1):
        if trials < 1:
            raise ValueError("need at least one trial")
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        self.measure = measure
        self.horizon = horizon
        self.trials = trials
        self.seed = int(seed)
        self.cap = cap
        self.threads = max(1, threads)


class EmpiricalDist:
    """Histogram of population sizes at the horizon.

    counts[n] is the number of uncapped trials ending at size n; capped
    trials are excluded from the histogram but counted, so
    sum(counts) + capped == trials.
    """

    __slots__ = ("counts", "capped", "trials", "horizon")

    def __init__(self, counts: dict, capped: int, trials: int, horizon: int):
        self.counts = dict(counts)
        self.capped = capped
        self.trials = trials
        self.horizon = horizon
        if sum(self.counts.values()) + capped != trials:
            raise AssertionError("histogram does not account for every trial")

    def ratio_to_one(self, n: int):
        """count(n)/count(1) with a delta-method standard error."""
        c1 = self.counts.get(1, 0)
        cn = self.counts.get(n, 0)
        if c1 == 0:
            raise ZeroDivisionError("no trials ended at size 1")
        ratio = cn / c1
        if cn == 0:
            return ratio, math.nan
        se = ratio * math.sqrt(1.0 / cn + 1.0 / c1)
        return ratio, se

    def __repr__(self):
        sizes = sorted(self.counts)
        head = {n: self.counts[n] for n in sizes[:6]}
        return (
            f"EmpiricalDist(t={self.horizon}, trials={self.trials}, "
            f"capped={self.capped}, counts~{head})"
        )


def _sampling_params(mu: EnvMeasure):
    if isinstance(mu, QuadUniform):
        return ("quad", float(mu.lo), float(mu.hi))
    weights = np.array([float(w) for w, _ in mu.atoms])
    weights /= weights.sum()
    laws = [np.array([float(c) for c in P.coeffs]) for _, P in mu.atoms]
    return ("atoms", weights, laws)


def _run_block(params, horizon, size, cap, key):
    rng = np.random.Generator(np.random.Philox(key=key))
    x = np.ones(size, dtype=np.int64)
    capped = np.zeros(size, dtype=bool)
    for _ in range(horizon):
        active = ~capped
        if params[0] == "quad":
            _, lo, hi = params
            # shared per-trial environment draw; offspring are 1 or 2, so the
            # step adds a Binomial(x, 1-r) batch of extra children
            r = lo + (hi - lo) * rng.random(size)
            births = rng.binomial(x, 1.0 - r)
            x = np.where(active, x + births, x)
        else:
            _, weights, laws = params
            idx = rng.choice(len(weights), size=size, p=weights)
            new_x = x.copy()
            for a, law in enumerate(laws):
                sel = active & (idx == a)
                if not np.any(sel):
                    continue
                counts = rng.multinomial(x[sel], law)
                degrees = np.arange(1, len(law) + 1)
                new_x[sel] = counts @ degrees
            x = new_x
        over = x > cap
        capped |= over
    return x, capped


def simulate(config: SimConfig) -> EmpiricalDist:
    """Run the process; deterministic for a given config, independent of the
    thread count (each block owns a counter-based substream)."""
    params = _sampling_params(config.measure)
    blocks = []
    remaining = config.trials
    b = 0
    while remaining > 0:
        size = min(BLOCK, remaining)
        key = np.array([config.seed, b], dtype=np.uint64)
        blocks.append((params, config.horizon, size, config.cap, key))
        remaining -= size
        b += 1

    def worker(args):
        return _run_block(*args)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(worker, blocks))
    else:
        results = [worker(args) for args in blocks]

    counts: dict = {}
    capped_total = 0
    for x, capped in results:
        capped_total += int(capped.sum())
        keep = x[~capped]
        vals, cnts = np.unique(keep, return_counts=True)
        for v, c in zip(vals.tolist(), cnts.tolist()):
            counts[v] = counts.get(v, 0) + c
    return EmpiricalDist(counts, capped_total, config.trials, config.horizon)


def exact_distribution(mu: EnvMeasure, horizon: int, n_max: int):
    """P(population = n) at the horizon for n = 1..n_max, exact rationals.

    The averaged iterated generating function is built by environment-wise
    composition (normalized by the measure mass each step); truncation of
    the series only removes mass beyond n_max, which is reported as the
    deficit: (probabilities, deficit).
    """
    mass = mu.mass()
    T = TruncSeries.identity(n_max, mode="rational")
    for _ in range(horizon):
        avg = averaged_compose(mu, T)
        T = TruncSeries([c / mass for c in avg.coeffs], mode="rational")
    probs = list(T.coeffs)
    deficit = 1 - sum(probs)
    return probs, deficit


def chi_square_statistic(emp: EmpiricalDist, probs, min_expected: float = 10.0):
    """Pearson statistic of the histogram against exact probabilities.

    Cells with expected count below min_expected are pooled into the last
    cell (with any truncation deficit); returns (statistic, dof).
    """
    n_trials = emp.trials - emp.capped
    expected = [float(p) * n_trials for p in probs]
    observed = [emp.counts.get(n, 0) for n in range(1, len(probs) + 1)]
    extra_obs = sum(
        c for n, c in emp.counts.items() if n > len(probs)
    )
    deficit_exp = max(0.0, n_trials - sum(expected))
    cells = []
    pool_obs, pool_exp = extra_obs, deficit_exp
    for o, e in zip(observed, expected):
        if e < min_expected:
            pool_obs += o
            pool_exp += e
        else:
            cells.append((o, e))
    if pool_exp > 0 or pool_obs > 0:
        if pool_exp < min_expected and cells:
            o, e = cells.pop()
            pool_obs += o
            pool_exp += e
        cells.append((pool_obs, pool_exp))
    stat = 0.0
    for o, e in cells:
        if e > 0:
            stat += (o - e) ** 2 / e
    dof = len(cells) - 1
    return stat, dof
