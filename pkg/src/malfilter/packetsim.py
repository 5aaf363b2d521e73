"""Packet-level simulator: score-based monitoring and dynamic-threshold filtering.

Monitors attach an integer malware score s in [0, 99] to every inbound
packet and label those at or above a fixed threshold.  The filter then turns
the controller's commanded filtering rate into a time-varying score
threshold using the recently observed score distribution, so the packets
most likely to be malicious are removed first.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .controllers import ControllerPolicy, make_policy, policy_output
from .fluidsim import write_trace_csv
from .model import SystemMatrices, ValidationError, network_system

N_SCORES = 100


@dataclass
class Packet:
    src: int
    dst: int
    is_malware: bool
    size: int = 1  # KB; 1 KB per packet maps KB volumes to packet counts
    score: int | None = None
    labeled_malware: bool = False


@dataclass
class ScoreModel:
    """Score distributions for legitimate and malware packets plus the
    monitor's fixed labeling cutoff."""

    legit_pmf: np.ndarray
    malware_pmf: np.ndarray
    monitor_threshold: int

    def __post_init__(self):
        for name in ("legit_pmf", "malware_pmf"):
            p = np.asarray(getattr(self, name), dtype=float)
            if p.shape != (N_SCORES,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
                raise ValidationError(f"{name} must be a distribution over [0, {N_SCORES - 1}]")
            object.__setattr__(self, name, p)

    @property
    def detection_rate(self) -> float:
        """P(score >= monitor_threshold | malware)."""
        return float(self.malware_pmf[self.monitor_threshold:].sum())

    @property
    def false_positive_rate(self) -> float:
        return float(self.legit_pmf[self.monitor_threshold:].sum())


def _discrete_gaussian(mean: float, std: float) -> np.ndarray:
    k = np.arange(N_SCORES)
    p = np.exp(-0.5 * ((k - mean) / std) ** 2)
    return p / p.sum()


def calibrated_score_model(detection_rate: float, legit_mean: float = 30.0,
                           legit_std: float = 15.0, malware_mean: float = 65.0,
                           malware_std: float = 15.0) -> ScoreModel:
    """Overlapping discretized Gaussians with the labeling cutoff (and a
    small nudge of the malware mean) solved so the detection rate is exact.

    Integer cutoffs alone cannot hit an arbitrary target, so after picking
    the closest cutoff the malware mean is adjusted within a few score
    points to make P(score >= cutoff | malware) equal the target.
    """
    if not 0 < detection_rate < 1:
        raise ValidationError("detection_rate must lie in (0, 1)")
    pmf = _discrete_gaussian(malware_mean, malware_std)
    tails = np.cumsum(pmf[::-1])[::-1]
    T = int(np.argmin(np.abs(tails - detection_rate)))
    mu = brentq(
        lambda m: _discrete_gaussian(m, malware_std)[T:].sum() - detection_rate,
        malware_mean - 12.0, malware_mean + 12.0)
    return ScoreModel(legit_pmf=_discrete_gaussian(legit_mean, legit_std),
                      malware_pmf=_discrete_gaussian(mu, malware_std),
                      monitor_threshold=T)


def score_packet(pkt: Packet, model: ScoreModel, rng) -> Packet:
    """Draw a score from the distribution matching the packet's ground truth
    and label it against the monitor cutoff."""
    pmf = model.malware_pmf if pkt.is_malware else model.legit_pmf
    pkt.score = int(rng.choice(N_SCORES, p=pmf))
    pkt.labeled_malware = pkt.score >= model.monitor_threshold
    return pkt


@dataclass
class FilterState:
    """Dynamic-threshold filter with a rolling window of score histograms."""

    mode: str = "hinf"
    window_len: int = 4
    dynamic_threshold: int = N_SCORES
    histograms: deque = field(default_factory=deque)

    def observe(self, hist: np.ndarray):
        self.histograms.append(np.asarray(hist))
        while len(self.histograms) > self.window_len:
            self.histograms.popleft()

    def combined(self) -> np.ndarray:
        """Windowed per-interval score counts (mean over the window)."""
        if not self.histograms:
            return np.zeros(N_SCORES)
        return np.mean(self.histograms, axis=0)


def translate_rate_to_threshold(u_target: float, filt: FilterState) -> int:
    """Smallest score threshold whose tail count does not exceed u_target,
    pushed to the highest threshold filtering the same count (filter less
    under ties).  Empty histogram or u_target below any tail gives 100
    (filter nothing); u_target covering the whole window gives 0."""
    hist = filt.combined()
    total = int(hist.sum())
    if total == 0:
        return N_SCORES
    if u_target >= total:
        return 0
    tail = np.concatenate([np.cumsum(hist[::-1])[::-1], [0]])  # tail[T] = count(score >= T)
    T = int(np.argmax(tail <= u_target))  # tail is nonincreasing
    while T < N_SCORES and tail[T + 1] == tail[T]:
        T += 1
    return T


#: scenario id -> (cost ratio, monitor detection rate)
SCENARIOS = {
    "S1": (100.0, 0.50),
    "S2": (100.0, 0.25),
    "S3": (200.0, 0.50),
    "S4": (200.0, 0.25),
    "S5": (0.1, 0.50),
}

#: (cumulative delivered malware packets, per-interval infection probability);
#: the fluid-simulator thresholds scaled to packet-level traffic volumes
PACKET_INFECTION_THRESHOLDS = [(5000.0, 0.02), (10000.0, 0.1)]


@dataclass
class PacketSimTrace:
    """Per-interval samples (shape (intervals, n)) and accumulated costs.

    x: malware packets left in flight after filtering, y: in-flight packets
    labeled malware by the monitor (pre-filter), u: filtered packets per
    time unit, m: falsely labeled legitimate arrivals per time unit,
    w: ground-truth malware arrivals per time unit, w_a: malware emission
    rate of infected sources, w_n: mislabeled arrivals (false positives plus
    missed malware) per time unit, z: H x + G u.
    """

    times: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    u: np.ndarray
    y: np.ndarray
    w_a: np.ndarray
    w_n: np.ndarray
    z: np.ndarray
    m: np.ndarray
    w: np.ndarray
    z_sq_integral: float
    w_sq_integral: float
    gamma: float | None = None
    gamma_star: float | None = None
    infected: np.ndarray | None = None


def run_packet_scenario(scenario: str, mode: str, seed: int,
                        horizon: float = 50.0, interval: float = 0.5,
                        sys: SystemMatrices | None = None,
                        policy: ControllerPolicy | None = None,
                        gamma_margin: float = 1.05,
                        legit_kb_per_pair: float = 1000.0,
                        malware_kb_per_pair: float = 200.0,
                        infection_thresholds=None,
                        initial_infected: int = 0,
                        h_boost: dict[int, float] | None = None) -> PacketSimTrace:
    """Discrete-event loop over fixed control intervals.

    Each node carries an in-flight inbound packet pool (the state x of the
    linear model).  Per interval: scored arrivals join the pool, the monitor
    counts labeled packets in flight (y), the filter removes the top-scored
    packets up to the commanded budget, and the exponential-delay delivery
    fraction 1 - exp(a * interval) hands the remainder to the sub-network,
    where delivered malware drives infections.

    mode is "hinf" (centralized robust controller synthesized offline for the
    scenario's cost ratio) or "heuristic" (remove as many packets as the
    monitor labeled).  Deterministic under seed.
    """
    if scenario not in SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}")
    if mode not in ("hinf", "heuristic"):
        raise ValidationError(f"unknown mode {mode!r}")
    ratio, detection = SCENARIOS[scenario]
    if sys is None:
        sys = network_system(cost_ratio=ratio, h_boost=h_boost)
    n = sys.n
    if policy is None and mode == "hinf":
        policy = make_policy(sys, "R2", gamma_margin=gamma_margin)
    if policy is not None:
        policy.reset()
    if infection_thresholds is None:
        infection_thresholds = PACKET_INFECTION_THRESHOLDS

    model = calibrated_score_model(detection)
    rng = np.random.default_rng(seed)
    intervals = int(round(horizon / interval))
    c_meas = float(np.mean(np.diag(sys.C)))
    deliver_frac = 1.0 - np.exp(np.mean(np.diag(sys.A)) * interval)

    infected = np.zeros(n, dtype=bool)
    infected[initial_infected] = True
    cum_received = np.zeros(n)
    filters = [FilterState(mode=mode) for _ in range(n)]
    pool_mal = np.zeros((n, N_SCORES), dtype=np.int64)
    pool_leg = np.zeros((n, N_SCORES), dtype=np.int64)

    legit_mean = legit_kb_per_pair * (n - 1)
    malware_emission = malware_kb_per_pair * (n - 1)

    times = np.empty(intervals)
    rec = {k: np.empty((intervals, n))
           for k in ("x", "x_hat", "u", "y", "w_a", "w_n", "z", "m", "w")}
    infected_rec = np.empty((intervals, n), dtype=bool)

    Hdiag = np.diag(sys.H)
    Gdiag = np.diag(sys.G)
    T_mon = model.monitor_threshold
    z_sq = w_sq = 0.0

    for k in range(intervals):
        # scored arrivals join the in-flight pools
        mal_mean = sys.D @ np.where(infected, malware_emission, 0.0)
        M = rng.poisson(mal_mean)
        Lg = rng.poisson(legit_mean, n)
        m_count = np.empty(n)
        miss_count = np.empty(n)
        for i in range(n):
            mal_arr = rng.multinomial(M[i], model.malware_pmf)
            leg_arr = rng.multinomial(Lg[i], model.legit_pmf)
            m_count[i] = leg_arr[T_mon:].sum()
            miss_count[i] = mal_arr[:T_mon].sum()
            pool_mal[i] += mal_arr
            pool_leg[i] += leg_arr

        # monitor: labeled in-flight packets
        pool_tot = pool_mal + pool_leg
        y_count = pool_tot[:, T_mon:].sum(axis=1).astype(float)
        for i in range(n):
            filters[i].observe(pool_tot[i])

        # filtering budget in packets for this interval
        if mode == "hinf":
            # the monitor knows its own operating point, so it reports an
            # unbiased in-flight malware estimate: labeled counts obey
            # labeled = det * x + fp * (total - x), inverted per node
            tot_count = pool_tot.sum(axis=1).astype(float)
            det, fp = model.detection_rate, model.false_positive_rate
            x_mon = np.maximum(0.0, (y_count - fp * tot_count) / (det - fp))
            u_rate = policy_output(policy, c_meas * x_mon, interval)
            u_target = u_rate * interval
        else:
            u_target = y_count.copy()

        filtered = np.empty(n)
        for i in range(n):
            T = translate_rate_to_threshold(u_target[i], filters[i])
            filters[i].dynamic_threshold = T
            filtered[i] = pool_tot[i, T:].sum()
            pool_mal[i, T:] = 0
            pool_leg[i, T:] = 0

        # state at the control instant: malware left in flight post-filter
        x_state = pool_mal.sum(axis=1).astype(float)

        # delivery with exponential in-flight delay
        delivered_mal = rng.binomial(pool_mal, deliver_frac)
        delivered_leg = rng.binomial(pool_leg, deliver_frac)
        pool_mal -= delivered_mal
        pool_leg -= delivered_leg

        u_applied = filtered / interval
        # exogenous measurement-error energy: mislabeled arrivals either way
        wn = (m_count + miss_count) / interval

        times[k] = k * interval
        rec["x"][k] = x_state
        rec["x_hat"][k] = policy.controller.x_hat if (policy and policy.controller) else 0.0
        rec["u"][k] = u_applied
        rec["y"][k] = y_count
        rec["w_a"][k] = np.where(infected, malware_emission / interval, 0.0)
        rec["w_n"][k] = wn
        rec["z"][k] = Hdiag * x_state + Gdiag * u_applied
        rec["m"][k] = m_count / interval
        rec["w"][k] = M / interval
        infected_rec[k] = infected

        z_sq += float(np.sum((Hdiag * x_state) ** 2 + (Gdiag * u_applied) ** 2)) * interval
        w_sq += float(np.sum((M / interval) ** 2 + wn**2)) * interval

        # infection propagation driven by delivered malware
        cum_received += delivered_mal.sum(axis=1)
        p = np.zeros(n)
        for level, prob in infection_thresholds:
            p = np.where(cum_received >= level, prob, p)
        infected = infected | ((~infected) & (rng.random(n) < p))

    ctrl = policy.controller if policy is not None else None
    return PacketSimTrace(
        times=times, x=rec["x"], x_hat=rec["x_hat"], u=rec["u"], y=rec["y"],
        w_a=rec["w_a"], w_n=rec["w_n"], z=rec["z"], m=rec["m"], w=rec["w"],
        z_sq_integral=z_sq, w_sq_integral=w_sq,
        gamma=(ctrl.gamma if ctrl is not None else None),
        gamma_star=(ctrl.gamma_star if ctrl is not None else None),
        infected=infected_rec)


def write_packet_trace_csv(trace: PacketSimTrace, path):
    """Same layout as the fluid trace export plus m_i and w_i columns."""
    write_trace_csv(trace, path, extra={"m": trace.m, "w": trace.w})
