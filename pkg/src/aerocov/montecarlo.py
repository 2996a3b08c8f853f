"""Monte Carlo simulator for the reference UAV.

Trials are generated in fixed-size blocks.  Block ``k`` draws from its own
Philox stream keyed by ``(seed, k)``, so estimates do not depend on how many
workers run the blocks or in which order they finish.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .antenna import AntennaKind, sector_gain
from .channel import NetworkParams, LosState
from .environment import los_table
from .quadrature import integrate
from .scenario import CoverageResult, Scenario

BLOCK_SIZE = 1000


@dataclass(frozen=True)
class DeploymentKind:
    """Which station network serves the UAV.

    ``network=None`` means the scenario's own dedicated ground-station network;
    the terrestrial variant carries its own density, height and (downtilted)
    sector pattern.
    """

    name: str = "gs"  # "gs" | "bs"
    network: Optional[NetworkParams] = None
    association: str = "nearest"  # "nearest" | "strongest"

    def __post_init__(self):
        if self.name not in ("gs", "bs"):
            raise ValueError(f"unknown deployment {self.name!r}")
        if self.association not in ("nearest", "strongest"):
            raise ValueError(f"unknown association rule {self.association!r}")
        if self.name == "bs" and self.network is None:
            raise ValueError("terrestrial deployment needs its own network parameters")

    @classmethod
    def dedicated_gs(cls):
        return cls("gs")

    @classmethod
    def terrestrial_bs(cls, network: NetworkParams, association: str = "nearest"):
        return cls("bs", network, association)

    def resolve(self, scn: Scenario) -> Scenario:
        return scn if self.network is None else scn.replace(net=self.network)


@dataclass(frozen=True)
class TrialConfig:
    n_trials: int = 100_000
    sim_radius_m: Optional[float] = None  # None -> automatic truncation rule
    seed: int = 0
    workers: int = 1
    block_size: int = BLOCK_SIZE
    # add the stations beyond the disc (sampled LOS, mean NLOS); see FarField
    far_field_mean: bool = True

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.sim_radius_m is not None and not self.sim_radius_m > 0:
            raise ValueError("sim_radius_m must be > 0")
        if self.block_size < 1 or self.workers < 1:
            raise ValueError("block_size and workers must be >= 1")


def block_rng(seed: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(block,))
    return np.random.Generator(np.random.Philox(ss))


def _mean_interference_density(scn: Scenario, classes=(LosState.LOS, LosState.NLOS)):
    """Mean received interference per unit radius (before eta and the UAV lobe)."""
    net = scn.net
    dg2 = scn.delta_gamma**2
    table = scn.los_table()

    def f(r):
        d2 = np.maximum(r * r + dg2, 1.0)
        p = table.probability(r)
        mu = scn.station_gain(r)
        total = 0.0
        if LosState.LOS in classes:
            total = total + p * d2 ** (-net.alpha_los / 2)
        if LosState.NLOS in classes:
            total = total + (1 - p) * d2 ** (-net.alpha_nlos / 2)
        return 2 * math.pi * net.density_per_m2 * r * mu * total

    return f


def auto_sim_radius(scn: Scenario, ratio: float = 1e-3) -> float:
    """Disc radius whose out-of-disc mean interference is below ``ratio`` of the in-disc mean.

    Never smaller than max(10 E[R1], 5 km).
    """
    radius = max(10 * scn.mean_serving_distance, 5000.0)
    f = _mean_interference_density(scn)
    bps = scn.los_table().breakpoints(np.inf)
    for _ in range(20):
        inner, _ = integrate(f, 0.0, radius, breakpoints=bps, rel_tol=1e-4, abs_tol=1e-300)
        outer, _ = integrate(f, radius, np.inf, breakpoints=bps, rel_tol=1e-4, abs_tol=1e-300)
        if outer <= ratio * inner:
            return radius
        radius *= 1.25
    return radius


@dataclass(frozen=True)
class FarField:
    """Interference from the stations beyond the simulated disc.

    Far LOS stations are rare but each can be strong, so replacing them by
    their mean would overstate their effect on coverage.  They are sampled
    explicitly from the thinned PPP of intensity lambda * P_L(r), with radii
    drawn by inverting the tabulated cumulative intensity ``los_cum``.  Far
    NLOS stations add many tiny terms and are replaced by their mean main-lobe
    interference; ``nlos_cum`` holds its cumulative value per radian.
    """

    radius: float
    grid: np.ndarray
    los_cum: np.ndarray
    nlos_cum: np.ndarray
    nlos_total: float

    @property
    def expected_los(self) -> float:
        return float(self.los_cum[-1])

    def _footprint(self, scn: Scenario, r1):
        """Outer radius and arc of the UAV main lobe on the station plane."""
        ant = scn.antenna
        dg = abs(scn.delta_gamma)
        if ant.kind is AntennaKind.OMNI:
            return np.full(r1.shape, np.inf), 2 * math.pi
        w = ant.beamwidth_rad
        if ant.kind is AntennaKind.FIXED:
            if scn.delta_gamma <= 0:
                return np.zeros(r1.shape), 2 * math.pi
            v = math.inf if w / 2 >= math.pi / 2 else dg * math.tan(w / 2)
            return np.full(r1.shape, v), 2 * math.pi
        lower = np.minimum(np.arctan2(dg, r1), math.pi / 2 - w / 2) - w / 2
        v = np.full(r1.shape, np.inf)
        tilted = lower > 0
        v[tilted] = dg / np.tan(lower[tilted])
        return v, w

    def nlos_mean(self, scn: Scenario, r1):
        r1 = np.asarray(r1, dtype=float)
        v, arc = self._footprint(scn, r1)
        part = np.interp(np.clip(v, self.grid[0], self.grid[-1]), self.grid, self.nlos_cum)
        part = np.where(np.isinf(v), self.nlos_total, np.where(v <= self.radius, 0.0, part))
        return arc * part

    def sample(self, scn: Scenario, r1, az1, rng):
        """Per-trial far-field interference [W] for servers at (r1, az1)."""
        r1 = np.asarray(r1, dtype=float)
        n = r1.size
        interf = self.nlos_mean(scn, r1)
        if self.expected_los <= 0:
            return interf
        counts = rng.poisson(self.expected_los, n)
        total = int(counts.sum())
        if total == 0:
            return interf
        trial = np.repeat(np.arange(n), counts)
        r = np.interp(rng.random(total) * self.expected_los, self.los_cum, self.grid)
        az = 2 * math.pi * rng.random(total) - math.pi
        net = scn.net
        lobe = _in_lobe(scn, r, az, r1[trial], np.asarray(az1, dtype=float)[trial])
        fading = _draw_fading(net, np.ones(total, dtype=bool), rng)
        d2 = r * r + scn.delta_gamma**2
        rx = (net.tx_power_w * scn.station_gain(r) * net.near_field_loss
              * d2 ** (-net.alpha_los / 2) * fading * scn.eta)
        return interf + np.bincount(trial, weights=np.where(lobe, rx, 0.0), minlength=n)


def far_field_interference(scn: Scenario, radius: float, points: int = 241) -> FarField:
    """Tabulate the far field of ``scn`` beyond ``radius`` (out to 1000 radii).

    P_L is constant between building crossings, so the work is done per cell:
    the LOS count of a cell is exact and the smooth NLOS integrand gets an
    8-point Gauss-Legendre rule (cells also split at the sector-pattern kinks).
    """
    net = scn.net
    table = scn.los_table()
    grid = radius * np.geomspace(1.0, 1e3, points)
    dg = scn.delta_gamma
    kinks = [dg / math.tan(phi) for phi in net.sector.kink_angles()
             if math.tan(phi) * dg > 0]
    cuts = np.concatenate([table.breakpoints(grid[-1]), kinks])
    edges = np.union1d(grid, cuts[(cuts > grid[0]) & (cuts < grid[-1])])
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)

    p_los = table.probability(mid)
    los_cells = p_los * math.pi * net.density_per_m2 * np.diff(edges**2)

    nodes, weights = np.polynomial.legendre.leggauss(8)
    x = mid[:, None] + half[:, None] * nodes[None, :]
    nlos = _mean_interference_density(scn, (LosState.NLOS,))
    scale = net.tx_power_w * net.near_field_loss * scn.eta / (2 * math.pi)
    nlos_cells = scale * half * (nlos(x.ravel()).reshape(x.shape) @ weights)

    at_grid = np.searchsorted(edges, grid)
    los_cum = np.concatenate([[0.0], np.cumsum(los_cells)])[at_grid]
    nlos_cum = np.concatenate([[0.0], np.cumsum(nlos_cells)])[at_grid]
    tail, _ = integrate(nlos, grid[-1], math.inf, rel_tol=1e-6, abs_tol=1e-300)
    return FarField(radius, grid, los_cum, nlos_cum, float(nlos_cum[-1] + scale * tail))


def sample_deployment(density_per_m2: float, sim_radius_m: float, rng: np.random.Generator):
    """PPP on the disc of radius ``sim_radius_m``; returns an (N, 2) array of x, y."""
    if not (density_per_m2 > 0 and sim_radius_m > 0):
        raise ValueError("density and radius must be > 0")
    n = rng.poisson(density_per_m2 * math.pi * sim_radius_m**2)
    r = sim_radius_m * np.sqrt(rng.random(n))
    az = 2 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(az), r * np.sin(az)])


def _wrap(angle):
    return np.abs((angle + math.pi) % (2 * math.pi) - math.pi)


def _in_lobe(scn: Scenario, r, az, r1, az1):
    """Geometric main-lobe test for stations at (r, az) given the serving station."""
    ant = scn.antenna
    dg = scn.delta_gamma
    if ant.kind is AntennaKind.OMNI:
        return np.ones(r.shape, dtype=bool)
    w = ant.beamwidth_rad
    if ant.kind is AntennaKind.FIXED:
        if dg <= 0:
            return np.zeros(r.shape, dtype=bool)
        return np.arctan2(r, dg) <= w / 2  # angle off nadir
    # steerable: azimuth sector around the server, elevation window around it
    elev = np.arctan2(abs(dg), r)
    elev1 = np.arctan2(abs(dg), r1)
    centre = np.minimum(elev1, math.pi / 2 - w / 2)
    return (_wrap(az - az1) <= w / 2) & (elev >= centre - w / 2) & (elev <= centre + w / 2)


def _draw_fading(net: NetworkParams, los, rng):
    if net.m_los == 1 and net.m_nlos == 1:
        return rng.standard_exponential(los.size)
    m = np.where(los, net.m_los, net.m_nlos).astype(float)
    return rng.gamma(m, 1.0 / m)


def _evaluate(scn: Scenario, r, az, counts, rng, association="nearest",
              forced_server_state: Optional[LosState] = None, far_field=None):
    """Shared trial kernel.

    Points are grouped per trial (``counts``).  With ``forced_server_state``
    the first point of every trial is the server and its LOS state is fixed.
    ``far_field`` (a ``FarField``) adds the stations outside the simulated disc.
    """
    net = scn.net
    n = counts.size
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    trial = np.repeat(np.arange(n), counts)
    dg = scn.delta_gamma

    los = rng.random(r.size) < los_table(scn.env, float(net.station_height_m),
                                         float(scn.uav_height_m)).probability(r)
    if forced_server_state is not None:
        los[starts] = forced_server_state is LosState.LOS
    fading = _draw_fading(net, los, rng)

    d2 = r * r + dg * dg
    mu = sector_gain(net.sector, np.arctan2(dg, r))
    alpha = np.where(los, net.alpha_los, net.alpha_nlos)
    mean_rx = net.tx_power_w * mu * net.near_field_loss * d2 ** (-alpha / 2)

    if forced_server_state is not None:
        srv = starts
    else:
        key = r if association == "nearest" else -mean_rx
        best = np.minimum.reduceat(key, starts)
        cand = np.flatnonzero(key == best[trial])
        _, first = np.unique(trial[cand], return_index=True)
        srv = cand[first]
    is_srv = np.zeros(r.size, dtype=bool)
    is_srv[srv] = True

    r1 = r[srv]
    az1 = az[srv]
    lobe = _in_lobe(scn, r, az, r1[trial], az1[trial])
    eta = scn.eta
    rx = mean_rx * fading * eta
    interf = np.add.reduceat(np.where(lobe & ~is_srv, rx, 0.0), starts)
    if far_field is not None:
        interf = interf + far_field.sample(scn, r1, az1, rng)

    signal = rx[srv]
    ant = scn.antenna
    if ant.kind is AntennaKind.FIXED and ant.serving_lobe_exclusion:
        signal = np.where(lobe[srv], signal, 0.0)
    covered = (signal > 0) & (signal >= scn.threshold * (interf + net.noise_w))

    others = np.where(is_srv, np.inf, r)
    return {
        "covered": covered,
        "r1": r1,
        "serving_los": los[srv],
        "interference": interf,
        "signal": signal,
        "n_interferers": np.add.reduceat((lobe & ~is_srv).astype(np.int64), starts),
        "nearest_other": np.minimum.reduceat(others, starts),
        "nearest_interferer": np.minimum.reduceat(np.where(lobe & ~is_srv, r, np.inf), starts),
        "serving_in_lobe": lobe[srv],
    }


def _sample_block(lam, radius, n, rng):
    mean = lam * math.pi * radius**2
    counts = rng.poisson(mean, n)
    empty = counts == 0
    resampled = 0
    while np.any(empty):
        resampled += int(empty.sum())
        counts[empty] = rng.poisson(mean, int(empty.sum()))
        empty = counts == 0
    total = int(counts.sum())
    r = radius * np.sqrt(rng.random(total))
    az = 2 * math.pi * rng.random(total)
    return r, az, counts, resampled


def simulate_block(scn: Scenario, kind: DeploymentKind, n: int, radius: float,
                   rng: np.random.Generator, far_field=None):
    """Run ``n`` independent trials; returns per-trial arrays plus diagnostics."""
    scn = kind.resolve(scn)
    r, az, counts, resampled = _sample_block(scn.density, radius, n, rng)
    out = _evaluate(scn, r, az, counts, rng, kind.association, far_field=far_field)
    out["resampled_empty"] = resampled
    return out


def run_trial(scn: Scenario, kind: DeploymentKind, cfg: TrialConfig, rng: np.random.Generator,
              stations=None) -> bool:
    """One end-to-end trial.  ``stations`` (an (N, 2) array) overrides the PPP draw."""
    if stations is None:
        radius = cfg.sim_radius_m or auto_sim_radius(kind.resolve(scn))
        return bool(simulate_block(scn, kind, 1, radius, rng)["covered"][0])
    stations = np.atleast_2d(np.asarray(stations, dtype=float))
    if stations.shape[0] == 0:
        raise ValueError("explicit deployment must contain at least one station")
    r = np.hypot(stations[:, 0], stations[:, 1])
    az = np.arctan2(stations[:, 1], stations[:, 0])
    out = _evaluate(kind.resolve(scn), r, az, np.array([r.size]), rng, kind.association)
    return bool(out["covered"][0])


def _run_block(args):
    scn, kind, cfg, radius, far, block, n = args
    out = simulate_block(scn, kind, n, radius, block_rng(cfg.seed, block), far)
    return (int(out["covered"].sum()), out["resampled_empty"],
            int((~out["serving_in_lobe"]).sum()))


def _blocks(cfg: TrialConfig):
    full, rest = divmod(cfg.n_trials, cfg.block_size)
    sizes = [cfg.block_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def estimate_coverage(scn: Scenario, kind: DeploymentKind, cfg: TrialConfig) -> CoverageResult:
    resolved = kind.resolve(scn)
    radius = cfg.sim_radius_m or auto_sim_radius(resolved)
    far = far_field_interference(resolved, radius) if cfg.far_field_mean else None
    jobs = [(scn, kind, cfg, radius, far, b, n) for b, n in _blocks(cfg)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(job) for job in jobs]
    hits = sum(p[0] for p in parts)
    p_hat = hits / cfg.n_trials
    return CoverageResult(
        probability=p_hat,
        std_error=math.sqrt(p_hat * (1 - p_hat) / cfg.n_trials),
        n_trials=cfg.n_trials,
        method="monte-carlo",
        diagnostics={
            "sim_radius_m": radius,
            "far_los_expected": None if far is None else far.expected_los,
            "resampled_empty": sum(p[1] for p in parts),
            "serving_outside_lobe": sum(p[2] for p in parts),
            "deployment": kind.name,
            "association": kind.association,
        },
    )


# Conditional oracles: the serving station is pinned at distance r1 (azimuth 0)
# and the remaining stations form a PPP on the annulus r1 < r < R.

def _sample_annulus(lam, r1, radius, n, rng):
    area = math.pi * (radius**2 - r1**2)
    counts = rng.poisson(lam * area, n)
    total = int(counts.sum())
    r = np.sqrt(r1**2 + rng.random(total) * (radius**2 - r1**2))
    az = 2 * math.pi * rng.random(total) - math.pi
    # prepend the server to each trial
    pos = np.concatenate([[0], np.cumsum(counts)[:-1]]) + np.arange(n)
    full_r = np.empty(total + n)
    full_az = np.empty(total + n)
    mask = np.ones(total + n, dtype=bool)
    mask[pos] = False
    full_r[pos] = r1
    full_az[pos] = 0.0
    full_r[mask] = r
    full_az[mask] = az
    return full_r, full_az, counts + 1


def estimate_conditional_coverage(scn: Scenario, r1_m: float, serving_state: LosState,
                                  cfg: TrialConfig) -> CoverageResult:
    """P(SINR >= theta | R1 = r1, serving state) by simulation."""
    radius = cfg.sim_radius_m or auto_sim_radius(scn)
    far = far_field_interference(scn, radius) if cfg.far_field_mean else None
    hits = 0
    for block, n in _blocks(cfg):
        rng = block_rng(cfg.seed, block)
        r, az, counts = _sample_annulus(scn.density, r1_m, radius, n, rng)
        out = _evaluate(scn, r, az, counts, rng, forced_server_state=serving_state,
                        far_field=far)
        hits += int(out["covered"].sum())
    p_hat = hits / cfg.n_trials
    return CoverageResult(p_hat, math.sqrt(p_hat * (1 - p_hat) / cfg.n_trials),
                          cfg.n_trials, "monte-carlo", {"sim_radius_m": radius})


def empirical_laplace(scn: Scenario, r1_m: float, s_values, cfg: TrialConfig):
    """Empirical E[exp(-s I_c / (p eta c))] for the LOS and NLOS interferer classes.

    Returns ``{LosState: (means, std_errors)}`` with one entry per ``s``.
    """
    s_values = np.asarray(s_values, dtype=float)
    radius = cfg.sim_radius_m or auto_sim_radius(scn)
    net = scn.net
    table = scn.los_table()
    dg = scn.delta_gamma
    sums = {st: np.zeros(s_values.size) for st in LosState}
    sq = {st: np.zeros(s_values.size) for st in LosState}
    for block, n in _blocks(cfg):
        rng = block_rng(cfg.seed, block)
        r, az, counts = _sample_annulus(scn.density, r1_m, radius, n, rng)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        is_srv = np.zeros(r.size, dtype=bool)
        is_srv[starts] = True
        los = rng.random(r.size) < table.probability(r)
        fading = _draw_fading(net, los, rng)
        lobe = _in_lobe(scn, r, az, np.full(r.size, r1_m), np.zeros(r.size)) & ~is_srv
        d2 = r * r + dg * dg
        mu = sector_gain(net.sector, np.arctan2(dg, r))
        for state in LosState:
            cls = los if state is LosState.LOS else ~los
            y = np.where(lobe & cls, fading * mu * d2 ** (-net.alpha(state) / 2), 0.0)
            Y = np.add.reduceat(y, starts)
            # 1 - exp(-sY) keeps precision when the transform is close to 1
            e = -np.expm1(-np.outer(s_values, Y))
            sums[state] += e.sum(axis=1)
            sq[state] += (e * e).sum(axis=1)
    out = {}
    N = cfg.n_trials
    for state in LosState:
        comp = sums[state] / N
        var = np.maximum(sq[state] / N - comp**2, 0.0)
        out[state] = (1.0 - comp, np.sqrt(var / N))
    return out
