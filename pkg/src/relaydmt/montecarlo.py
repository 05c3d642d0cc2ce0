"""Monte Carlo outage estimation and slope extraction.

The achievability side of every tradeoff claim is checked by sampling
fading realizations, building the induced linear channel once per
realization, and reusing its singular values across the whole SNR and
rate grid. Outage slopes on a log-log axis estimate the diversity
order actually delivered by a schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import PropagationProgram, TransferModel
from .netgraph import Network
from .protocol import Schedule


def mutual_info(h, snr, sigma=None) -> float:
    """log2 det(I + snr * H H^H Sigma^-1) in bits.

    ``h`` may be a TransferModel, in which case its own noise
    covariance is used unless an explicit ``sigma`` overrides it.
    Whitening goes through a Cholesky factor, so the result is the
    mutual information of the actual noisy channel, not the identity
    approximation.
    """
    if isinstance(h, TransferModel):
        sigma = h.sigma if sigma is None else sigma
        h = h.h
    h = np.asarray(h)
    if sigma is None:
        s = np.linalg.svd(h, compute_uv=False)
    else:
        L = np.linalg.cholesky(np.asarray(sigma))
        s = np.linalg.svd(np.linalg.solve(L, h), compute_uv=False)
    return float(np.log2(1.0 + snr * s**2).sum())


@dataclass(frozen=True)
class SimPlan:
    """Sweep settings; the seed pins the whole gain stream."""

    snr_db: tuple = (10, 15, 20, 25, 30, 35, 40)
    rates: tuple = (0.0,)
    trials: int = 10_000
    seed: int = 0
    cycles: int = 4
    batch: int = 256
    count_floor: int = 25
    fit_points: int = 4


@dataclass(frozen=True)
class OutageEstimate:
    snr_db: float
    rate: float
    outages: int
    trials: int

    @property
    def prob(self) -> float:
        return self.outages / self.trials

    def wilson(self, z: float = 1.96):
        n, p = self.trials, self.outages / self.trials
        denom = 1.0 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        return max(center - half, 0.0), min(center + half, 1.0)


@dataclass(frozen=True)
class SlopeFit:
    slope: float | None
    intercept: float | None
    snrs_used: tuple
    uncertainty: float | None = None
    note: str = ""


@dataclass(frozen=True)
class SweepResult:
    estimates: dict              # (snr_db, rate) -> OutageEstimate
    slopes: dict                 # rate -> SlopeFit
    plan: SimPlan
    total_slots: int             # window length incl. start-up
    n_symbols: int               # symbols the rate budget charged for

    def estimate(self, snr_db, rate) -> OutageEstimate:
        return self.estimates[(snr_db, rate)]


def fit_slope(estimates, count_floor=25, fit_points=4) -> SlopeFit:
    """Diversity estimate from the top SNR points that still have
    enough outage events to trust.

    Plain least squares of log10 P against log10 SNR over the highest
    ``fit_points`` grid points whose event count clears the floor; the
    asymptotic slope only shows at the top of the grid, so low points
    never enter. The quoted uncertainty pushes each point's Wilson
    half-width through the fit.
    """
    usable = [e for e in sorted(estimates, key=lambda e: e.snr_db)
              if e.outages >= count_floor]
    usable = usable[-fit_points:]
    if len(usable) < 2:
        return SlopeFit(None, None, (), None,
                        f"only {len(usable)} grid points reached "
                        f"{count_floor} outage events")
    xs, ys, hs = [], [], []
    for e in usable:
        lo, hi = e.wilson()
        lo = max(lo, 1e-12)
        hs.append(max((math.log10(hi) - math.log10(lo)) / 2, 1e-6))
        xs.append(e.snr_db / 10.0)          # log10 of the SNR
        ys.append(math.log10(e.prob))
    xs, ys, hs = (np.array(v) for v in (xs, ys, hs))
    xm, ym = xs.mean(), ys.mean()
    sxx = ((xs - xm) ** 2).sum()
    b = float(((xs - xm) * (ys - ym)).sum() / sxx)
    spread = math.sqrt(float((((xs - xm) / sxx) ** 2 * hs**2).sum()))
    return SlopeFit(-b, float(ym - b * xm),
                    tuple(e.snr_db for e in usable), spread)


def _draw_gains(rng, n_edges, batch):
    z = rng.standard_normal((2, n_edges, batch))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)


def _thresholds(plan, sched, n_rows):
    """Bits required per window for each (snr, rate) cell.

    The budget charges the schedule's own throughput: cycles times
    symbols-per-cycle, at r * log2(snr) bits each. A schedule that
    spends extra slots on priming or on an odd-cycle pause therefore
    pays for them through its smaller symbol count, not through an
    inflated target. Zero rate falls back to one bit per delivered
    symbol so slopes at r=0 remain well defined.
    """
    charged = plan.cycles * sched.symbols_per_cycle
    thr = {}
    for db in plan.snr_db:
        rho = 10.0 ** (db / 10.0)
        for r in plan.rates:
            if r > 0:
                thr[(db, r)] = charged * r * math.log2(rho)
            else:
                thr[(db, r)] = float(n_rows)
    return thr


def _batched_whitened_sv(h, g):
    rows = h.shape[1]
    sigma = np.eye(rows) + g @ np.conj(np.swapaxes(g, 1, 2))
    L = np.linalg.cholesky(sigma)
    return np.linalg.svd(np.linalg.solve(L, h), compute_uv=False)


def outage_sweep(net: Network, sched: Schedule, plan: SimPlan) -> SweepResult:
    """Estimate outage probability over the plan's SNR x rate grid.

    One propagation and one SVD per fading realization serve every
    grid cell; outage is declared when the window's mutual information
    falls below the rate budget of the cell.
    """
    prog = PropagationProgram(net, sched, plan.cycles)
    thr = _thresholds(plan, sched, len(prog.kept_rows))
    counts = {key: 0 for key in thr}
    rhos = {db: 10.0 ** (db / 10.0) for db in plan.snr_db}

    done = 0
    ss = np.random.SeedSequence(plan.seed)
    children = iter(ss.spawn(-(-plan.trials // plan.batch)))
    while done < plan.trials:
        b = min(plan.batch, plan.trials - done)
        rng = np.random.default_rng(next(children))
        gains = _draw_gains(rng, prog.n_edges, plan.batch)[:, :b]
        h, g = prog.run(gains)
        sv = _batched_whitened_sv(h, g)
        sv2 = sv ** 2
        for db in plan.snr_db:
            bits = np.log2(1.0 + rhos[db] * sv2).sum(axis=1)
            for r in plan.rates:
                counts[(db, r)] += int((bits < thr[(db, r)]).sum())
        done += b

    estimates = {
        (db, r): OutageEstimate(db, r, counts[(db, r)], plan.trials)
        for db in plan.snr_db for r in plan.rates
    }
    slopes = {
        r: fit_slope([estimates[(db, r)] for db in plan.snr_db],
                     plan.count_floor, plan.fit_points)
        for r in plan.rates
    }
    return SweepResult(estimates, slopes, plan, prog.total_slots,
                       plan.cycles * sched.symbols_per_cycle)


@dataclass(frozen=True)
class PairedSweep:
    """Two sweeps over identical fading draws."""

    first: SweepResult
    second: SweepResult

    def slope_gap(self, rate) -> float | None:
        a = self.first.slopes[rate].slope
        b = self.second.slopes[rate].slope
        if a is None or b is None:
            return None
        return abs(a - b)


def whitening_check(net: Network, sched: Schedule, plan: SimPlan) -> PairedSweep:
    """Same draws scored with the true noise covariance and with the
    identity approximation; a material slope gap would mean the
    amplified-noise correction matters at these SNRs."""
    prog = PropagationProgram(net, sched, plan.cycles)
    thr = _thresholds(plan, sched, len(prog.kept_rows))
    counts_w = {key: 0 for key in thr}
    counts_i = {key: 0 for key in thr}
    rhos = {db: 10.0 ** (db / 10.0) for db in plan.snr_db}

    done = 0
    ss = np.random.SeedSequence(plan.seed)
    children = iter(ss.spawn(-(-plan.trials // plan.batch)))
    while done < plan.trials:
        b = min(plan.batch, plan.trials - done)
        rng = np.random.default_rng(next(children))
        gains = _draw_gains(rng, prog.n_edges, plan.batch)[:, :b]
        h, g = prog.run(gains)
        sv_w = _batched_whitened_sv(h, g) ** 2
        sv_i = np.linalg.svd(h, compute_uv=False) ** 2
        for db in plan.snr_db:
            bits_w = np.log2(1.0 + rhos[db] * sv_w).sum(axis=1)
            bits_i = np.log2(1.0 + rhos[db] * sv_i).sum(axis=1)
            for r in plan.rates:
                counts_w[(db, r)] += int((bits_w < thr[(db, r)]).sum())
                counts_i[(db, r)] += int((bits_i < thr[(db, r)]).sum())
        done += b

    def bundle(counts):
        est = {(db, r): OutageEstimate(db, r, counts[(db, r)], plan.trials)
               for db in plan.snr_db for r in plan.rates}
        slopes = {r: fit_slope([est[(db, r)] for db in plan.snr_db],
                               plan.count_floor, plan.fit_points)
                  for r in plan.rates}
        return SweepResult(est, slopes, plan, prog.total_slots,
                           plan.cycles * sched.symbols_per_cycle)

    return PairedSweep(bundle(counts_w), bundle(counts_i))


def backflow_check(net: Network, sched: Schedule, plan: SimPlan) -> PairedSweep:
    """Same draws on the real network and on a twin with the reverse
    backbone edges removed, isolating what back-flow leakage does to
    the outage slope."""
    if sched.backbone is None:
        raise ValueError("schedule carries no path decomposition")
    reverse = set()
    for path in sched.backbone:
        for a, b in zip(path, path[1:]):
            if net.has_edge(b, a):
                reverse.add((b, a))
    twin = net.without_edges(reverse)

    prog_a = PropagationProgram(net, sched, plan.cycles)
    prog_b = PropagationProgram(twin, sched, plan.cycles)
    # the twin's edges are a subset; reuse the same per-edge draws
    col_map = [prog_a.edge_index[pair] for pair in sorted(twin.edge_set)]

    thr_a = _thresholds(plan, sched, len(prog_a.kept_rows))
    thr_b = _thresholds(plan, sched, len(prog_b.kept_rows))
    counts_a = {key: 0 for key in thr_a}
    counts_b = {key: 0 for key in thr_b}
    rhos = {db: 10.0 ** (db / 10.0) for db in plan.snr_db}

    done = 0
    ss = np.random.SeedSequence(plan.seed)
    children = iter(ss.spawn(-(-plan.trials // plan.batch)))
    while done < plan.trials:
        b = min(plan.batch, plan.trials - done)
        rng = np.random.default_rng(next(children))
        gains = _draw_gains(rng, prog_a.n_edges, plan.batch)[:, :b]
        for prog, counts, thr, gvec in (
                (prog_a, counts_a, thr_a, gains),
                (prog_b, counts_b, thr_b, gains[col_map])):
            h, g = prog.run(gvec)
            sv2 = _batched_whitened_sv(h, g) ** 2
            for db in plan.snr_db:
                bits = np.log2(1.0 + rhos[db] * sv2).sum(axis=1)
                for r in plan.rates:
                    counts[(db, r)] += int((bits < thr[(db, r)]).sum())
        done += b

    def bundle(counts, prog):
        est = {(db, r): OutageEstimate(db, r, counts[(db, r)], plan.trials)
               for db in plan.snr_db for r in plan.rates}
        slopes = {r: fit_slope([est[(db, r)] for db in plan.snr_db],
                               plan.count_floor, plan.fit_points)
                  for r in plan.rates}
        return SweepResult(est, slopes, plan, prog.total_slots,
                           plan.cycles * sched.symbols_per_cycle)

    return PairedSweep(bundle(counts_a, prog_a), bundle(counts_b, prog_b))
