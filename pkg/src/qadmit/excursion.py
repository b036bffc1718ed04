"""Excursion events on base sample paths and their Monte Carlo statistics.

A base sample path divides time at markers U1 = W, U2 = W + B, U3 = 2W + B
(B a multiple of the lookahead length W) and asks the net-input walk to

* hug its drift line within an affine envelope on (U1, U2]   -> e1,
* stay below 2W of net input over (0, U1] and (U2, U3]       -> e3, e4
  (two W-long buffers that decouple the policy's past from the walk's
  future), and
* crash below a fixed barrier soon after U3                  -> e5,
  via the first-passage time z of the post-U3 walk.

e1, e3, e4, e5 depend only on the input stream; e2 (a small queue at the
relabeled origin) additionally needs a policy and is produced by the
warm-started diagnostic.  The events sit on disjoint stretches of a
memoryless stream, so they are mutually independent; the estimators here
make that checkable along with the probability claims that drive the
lower-bound argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, EstimationError
from .sim import last_low_time, run_simulation, window_diversions
from .stream import EventStream, ModelParams, count_events, generate_stream, replication_seed


@dataclass(frozen=True)
class ExcursionConfig:
    """Geometry and slack constants of the base-sample-path events.

    ``k`` fixes the drift stretch B = k * W; ``epsilon`` and ``zeta`` are
    the envelope slacks (0 < epsilon < min(zeta, drift)); ``phi`` scales
    the first-passage deadline phi * W; ``q_ref`` is the reference queue
    scale entering the barrier (a measured or oracle stand-in for the
    optimal mean queue, which has no closed form).
    """

    params: ModelParams
    k: float
    epsilon: float
    zeta: float
    phi: float
    q_ref: float

    def __post_init__(self) -> None:
        if self.k <= 0 or self.phi <= 0 or self.zeta <= 0 or self.q_ref < 0:
            raise ConfigurationError("k, phi, zeta must be > 0 and q_ref >= 0")
        if not (0.0 < self.epsilon < min(self.zeta, self.params.drift)):
            raise ConfigurationError(
                f"need 0 < epsilon < min(zeta, drift) = "
                f"{min(self.zeta, self.params.drift)}, got {self.epsilon}"
            )

    @property
    def window(self) -> float:
        return self.params.window

    @property
    def buffer_len(self) -> float:
        """Length B of the sustained-drift stretch."""
        return self.k * self.params.window

    @property
    def markers(self) -> tuple[float, float, float]:
        w, b = self.params.window, self.buffer_len
        return w, w + b, 2.0 * w + b

    @property
    def barrier(self) -> float:
        """Depth the post-U3 walk must undershoot for the stopping time."""
        w, b = self.params.window, self.buffer_len
        return 6.0 * self.q_ref + (self.params.drift - self.epsilon) * b + self.zeta + 4.0 * w

    @property
    def deadline(self) -> float:
        return self.phi * self.params.window

    @property
    def horizon_needed(self) -> float:
        return self.markers[2] + self.deadline


@dataclass
class EventIndicators:
    """Realized excursion events on one stream (e2 needs a queue sample)."""

    e1: bool
    e3: bool
    e4: bool
    e5: bool
    z_value: float | None
    e2: bool | None = None


def wilson_halfwidth(successes: int, n: int, z: float = 1.0) -> float:
    """Half-width of the Wilson score interval; z=1 gives a 1-sigma scale."""
    if n == 0:
        return float("nan")
    phat = successes / n
    denom = 1.0 + z * z / n
    return z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom


def envelope_slack_required(stream: EventStream, config: ExcursionConfig, origin: float = 0.0) -> float:
    """Smallest zeta that makes the drift-envelope event true on this path.

    The walk is piecewise constant while the envelope is affine, so
    checking each event's pre- and post-jump value plus the segment end at
    B is exhaustive.  e1 holds exactly when this value is <= zeta, which
    gives pathwise monotonicity of e1 in zeta for free.
    """
    u1, u2, _ = config.markers
    drift, eps = config.params.drift, config.epsilon
    b = config.buffer_len
    n1 = count_events(stream, origin + u1)
    n2 = count_events(stream, origin + u2)
    c = stream.prefix
    s0 = c[n1]
    worst = abs(0.0 - drift * b) - eps * b  # left limit at B on the final flat segment
    if n2 > n1:
        u = stream.times[n1:n2] - (origin + u1)
        post = c[n1 + 1 : n2 + 1] - s0
        pre = c[n1:n2] - s0
        dev = np.maximum(np.abs(post - drift * u), np.abs(pre - drift * u)) - eps * u
        worst = max(float(dev.max()), abs(float(post[-1]) - drift * b) - eps * b)
    return worst


def first_passage(stream: EventStream, config: ExcursionConfig, origin: float = 0.0) -> float | None:
    """First time z with walk(U3, U3+z) < -barrier, or None if never hit."""
    _, _, u3 = config.markers
    n3 = count_events(stream, origin + u3)
    walk = stream.prefix[n3 + 1 :] - stream.prefix[n3]
    hits = walk < -config.barrier
    if not hits.any():
        return None
    j = int(np.argmax(hits))
    return float(stream.times[n3 + j] - (origin + u3))


def evaluate_events(
    stream: EventStream, config: ExcursionConfig, origin: float = 0.0
) -> EventIndicators:
    """Evaluate e1, e3, e4, e5 (and the stopping time) on one stream.

    ``origin`` relabels the time axis so a warm-started path can be scored
    as if stationary at time zero.  The stream must extend at least to
    origin + U3 + phi * W.
    """
    u1, u2, u3 = config.markers
    if stream.horizon < origin + config.horizon_needed:
        raise ConfigurationError(
            f"stream horizon {stream.horizon} shorter than required "
            f"{origin + config.horizon_needed}"
        )
    w = config.params.window
    c = stream.prefix
    n0 = count_events(stream, origin)
    n1 = count_events(stream, origin + u1)
    n2 = count_events(stream, origin + u2)
    n3 = count_events(stream, origin + u3)

    e1 = envelope_slack_required(stream, config, origin) <= config.zeta
    e3 = (c[n1] - c[n0]) <= 2.0 * w
    e4 = (c[n3] - c[n2]) <= 2.0 * w
    z = first_passage(stream, config, origin)
    e5 = z is not None and z <= config.deadline
    return EventIndicators(e1=bool(e1), e3=bool(e3), e4=bool(e4), e5=e5, z_value=z)


@dataclass(frozen=True)
class EventEstimate:
    """A Monte Carlo indicator mean with its Wilson-scale standard error."""

    name: str
    mean: float
    se: float
    hits: int
    n: int


@dataclass
class ExcursionReport:
    """Event probability estimates plus their pairwise correlations.

    ``z_given_hit`` summarizes the stopping time over the paths where the
    barrier was crossed at all (within the generated horizon).
    """

    estimates: dict[str, EventEstimate]
    correlations: dict[str, float]
    n_samples: int
    e5_log_prob_per_window: float | None
    z_given_hit: "MeanCI | None" = None


_EVENT_NAMES = ("e1", "e3", "e4", "e5")


def _pairwise_correlations(indicators: np.ndarray) -> dict[str, float]:
    cors: dict[str, float] = {}
    for a in range(len(_EVENT_NAMES)):
        for b in range(a + 1, len(_EVENT_NAMES)):
            xa = indicators[:, a].astype(float)
            xb = indicators[:, b].astype(float)
            if xa.std() == 0.0 or xb.std() == 0.0:
                r = 0.0  # a degenerate indicator carries no linear dependence
            else:
                r = float(np.corrcoef(xa, xb)[0, 1])
            cors[f"{_EVENT_NAMES[a]}:{_EVENT_NAMES[b]}"] = r
    return cors


def estimate_event_probs(
    config: ExcursionConfig, n_samples: int, seed: int
) -> tuple[ExcursionReport, np.ndarray]:
    """Estimate P(e1), P(e3), P(e4), P(e5) over i.i.d. streams.

    Returns the report plus the raw (n_samples, 4) boolean indicator matrix
    so callers can reuse the same draws (e.g. for independence checks).
    """
    if n_samples < 100:
        raise ConfigurationError(f"need n_samples >= 100, got {n_samples}")
    horizon = config.horizon_needed
    rows = np.empty((n_samples, 4), dtype=bool)
    z_hits = []
    for i in range(n_samples):
        st = generate_stream(config.params, horizon, replication_seed(seed, i))
        ev = evaluate_events(st, config)
        rows[i] = (ev.e1, ev.e3, ev.e4, ev.e5)
        if ev.z_value is not None:
            z_hits.append(ev.z_value)

    estimates = {}
    for j, name in enumerate(_EVENT_NAMES):
        hits = int(rows[:, j].sum())
        estimates[name] = EventEstimate(
            name=name,
            mean=hits / n_samples,
            se=wilson_halfwidth(hits, n_samples),
            hits=hits,
            n=n_samples,
        )
    p5 = estimates["e5"].mean
    report = ExcursionReport(
        estimates=estimates,
        correlations=_pairwise_correlations(rows),
        n_samples=n_samples,
        e5_log_prob_per_window=(-math.log(p5) / config.params.window) if p5 > 0 else None,
        z_given_hit=_mean_ci(z_hits) if z_hits else None,
    )
    return report, rows


def e1_zeta_sweep(
    config: ExcursionConfig, zetas, n_samples: int, seed: int
) -> list[tuple[float, float, float]]:
    """P(e1) across a zeta grid on shared streams.

    The per-path minimal slack is computed once, so the estimates are
    exactly monotone in zeta by construction (common random numbers).
    Returns (zeta, estimate, wilson se) triples sorted by zeta.
    """
    zetas = sorted(float(z) for z in zetas)
    if zetas[0] <= config.epsilon:
        raise ConfigurationError("every zeta in the sweep must exceed epsilon")
    horizon = config.horizon_needed
    required = np.empty(n_samples)
    for i in range(n_samples):
        st = generate_stream(config.params, horizon, replication_seed(seed, i))
        required[i] = envelope_slack_required(st, config)
    out = []
    for z in zetas:
        hits = int((required <= z).sum())
        out.append((z, hits / n_samples, wilson_halfwidth(hits, n_samples)))
    return out


@dataclass
class RateFit:
    """Fit of -ln P(e5) against the window length."""

    slope: float
    intercept: float
    r_squared: float
    points: list[tuple[float, float, int]]
    dropped: list[float]


def e5_rate_fit(
    config: ExcursionConfig, windows, n_samples: int, seed: int
) -> RateFit:
    """Fit the exponential decay of the deep-excursion probability in W.

    ``config`` serves as the template; its window is replaced by each entry
    of ``windows``.  Windows with zero hits are dropped (and reported); at
    least three usable points are required for the fit.
    """
    windows = sorted(float(w) for w in windows)
    points: list[tuple[float, float, int]] = []
    dropped: list[float] = []
    for j, w in enumerate(windows):
        params = ModelParams(
            arrival_rate=config.params.arrival_rate,
            divert_budget=config.params.divert_budget,
            window=w,
        )
        cfg = replace(config, params=params)
        hits = 0
        horizon = cfg.horizon_needed
        for i in range(n_samples):
            st = generate_stream(params, horizon, replication_seed(seed, (j + 1) * n_samples + i))
            ev = evaluate_events(st, cfg)
            hits += ev.e5
        if hits == 0:
            dropped.append(w)
        else:
            points.append((w, hits / n_samples, hits))
    if len(points) < 3:
        raise EstimationError(
            f"only {len(points)} windows had any deep-excursion hits; "
            f"need at least 3 (dropped: {dropped})"
        )
    ws = np.array([p[0] for p in points])
    ys = -np.log([p[1] for p in points])
    slope, intercept = np.polyfit(ws, ys, 1)
    fitted = slope * ws + intercept
    ss_res = float(((ys - fitted) ** 2).sum())
    ss_tot = float(((ys - ys.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        points=points,
        dropped=dropped,
    )


@dataclass(frozen=True)
class MeanCI:
    mean: float
    halfwidth: float
    n: int


def _mean_ci(values) -> MeanCI:
    arr = np.asarray(values, dtype=float)
    n = arr.size
    if n == 0:
        return MeanCI(float("nan"), float("nan"), 0)
    hw = 1.96 * arr.std(ddof=1) / math.sqrt(n) if n > 1 else float("nan")
    return MeanCI(float(arr.mean()), hw, n)


@dataclass
class DiagnosticReport:
    """Warm-started diversion/idling statistics conditional on e1 and e2.

    ``y_over_b`` is the diversion count on the drift stretch scaled by its
    length, ``v_last_low`` the last time the queue dips to 2 * q_ref inside
    that stretch, ``wasted`` the wasted-token count over the whole base
    path, and ``low_at_origin`` the mean of the indicator Q(0) <= 2 * q_ref
    (the occupancy diagnostic whose limsup the lower-bound argument pins
    below 1/3).
    """

    policy: str
    q_ref: float
    q_ref_source: str
    n_samples: int
    warmup_time: float
    p_e1: EventEstimate
    p_e2: EventEstimate
    n_conditional: int
    low_conditional: bool
    y_over_b: MeanCI
    v_last_low: MeanCI
    wasted: MeanCI
    low_at_origin: MeanCI
    per_sample: list[dict]
    warmup_shift_ok: bool | None = None
    p_e2_doubled: EventEstimate | None = None


DEFAULT_WARMUP_EVENTS = 100_000


def default_warmup_time(config: ExcursionConfig) -> float:
    """Warm-up long enough for both event-count and window-mixing scales."""
    return max(DEFAULT_WARMUP_EVENTS / config.params.total_rate, 100.0 * config.params.window)


def reference_queue(params: ModelParams, policy_spec: str, seed: int = 0,
                    pilot_horizon: float = 50_000.0) -> tuple[float, str]:
    """Stationary mean-queue stand-in for the barrier's reference scale.

    Threshold policies use the exact birth-death oracle; anything else gets
    a measured pilot run.  The source tag is carried into reports because
    the substitution (measured mean for the unknown optimal mean) should
    stay visible.
    """
    from .analytic import bd_stationary
    from .policy import make_policy, min_feasible_threshold

    if policy_spec == "threshold:auto":
        return bd_stationary(params, min_feasible_threshold(params)).mean_queue, "bd-oracle"
    if policy_spec.startswith("threshold:x="):
        pol = make_policy(policy_spec, params)
        return bd_stationary(params, pol.x).mean_queue, "bd-oracle"
    st = generate_stream(params, pilot_horizon + params.window, replication_seed(seed, 0))
    _, _, m = run_simulation(st, policy_spec, t_end=pilot_horizon, burn_in=0.2)
    return m.mean_queue_event, "pilot-run"


def diversion_idling_diagnostic(
    config: ExcursionConfig,
    policy_spec: str,
    n_samples: int,
    seed: int,
    warmup_time: float | None = None,
    q_ref_source: str = "caller",
    check_warmup_sensitivity: bool = False,
) -> DiagnosticReport:
    """Warm up a policy, relabel the origin, and probe the base-path logic.

    Each sample simulates the policy through a warm-up plus one base path,
    treats the warm-up end as time zero, records e2 (queue at origin at
    most 6 * q_ref) and e1, and conditional on both collects the diversion
    count over the drift stretch, the last-low time, the wasted tokens, and
    the low-at-origin indicator.
    """
    if warmup_time is None:
        warmup_time = default_warmup_time(config)
    rows = _diagnostic_rows(config, policy_spec, n_samples, seed, warmup_time)

    e1_hits = sum(r["e1"] for r in rows)
    e2_hits = sum(r["e2"] for r in rows)
    cond = [r for r in rows if r["e1"] and r["e2"]]
    report = DiagnosticReport(
        policy=policy_spec,
        q_ref=config.q_ref,
        q_ref_source=q_ref_source,
        n_samples=n_samples,
        warmup_time=warmup_time,
        p_e1=EventEstimate("e1", e1_hits / n_samples, wilson_halfwidth(e1_hits, n_samples), e1_hits, n_samples),
        p_e2=EventEstimate("e2", e2_hits / n_samples, wilson_halfwidth(e2_hits, n_samples), e2_hits, n_samples),
        n_conditional=len(cond),
        low_conditional=len(cond) < 50,
        y_over_b=_mean_ci([r["Y"] / config.buffer_len for r in cond]),
        v_last_low=_mean_ci([r["V"] for r in cond]),
        wasted=_mean_ci([r["J"] for r in cond]),
        low_at_origin=_mean_ci([r["L0"] for r in cond]),
        per_sample=rows,
    )
    if check_warmup_sensitivity:
        rows2 = _diagnostic_rows(config, policy_spec, n_samples, seed + 1, 2.0 * warmup_time)
        e2b = sum(r["e2"] for r in rows2)
        est2 = EventEstimate("e2", e2b / n_samples, wilson_halfwidth(e2b, n_samples), e2b, n_samples)
        report.p_e2_doubled = est2
        ci = max(report.p_e2.se, est2.se)
        report.warmup_shift_ok = abs(est2.mean - report.p_e2.mean) < max(ci, 1.0 / n_samples)
    return report


def _diagnostic_rows(
    config: ExcursionConfig,
    policy_spec: str,
    n_samples: int,
    seed: int,
    warmup_time: float,
) -> list[dict]:
    params = config.params
    u1, u2, u3 = config.markers
    b = config.buffer_len
    t_end = warmup_time + config.horizon_needed
    rows = []
    for i in range(n_samples):
        st = generate_stream(params, t_end + params.window, replication_seed(seed, i))
        traj, trace, _ = run_simulation(st, policy_spec, q0=0, t_end=t_end)
        origin = warmup_time
        q0 = traj.queue_at(st, origin)
        ev = evaluate_events(st, config, origin=origin)
        ev.e2 = q0 <= 6.0 * config.q_ref
        y = window_diversions(trace, st, origin + u1, origin + u2)
        v = last_low_time(traj, st, 2.0 * config.q_ref, origin + u1, b)
        n_lo = count_events(st, origin)
        n_hi = count_events(st, origin + config.horizon_needed)
        pre = traj.pre_event_queue[n_lo:n_hi]
        wasted = int(((st.marks[n_lo:n_hi] == -1) & (pre == 0)).sum())
        rows.append(
            {
                "sample": i,
                "e1": ev.e1,
                "e2": ev.e2,
                "e3": ev.e3,
                "e4": ev.e4,
                "e5": ev.e5,
                "z": ev.z_value,
                "Y": y,
                "V": v,
                "J": wasted,
                "L0": int(q0 <= 2.0 * config.q_ref),
                "Q0": q0,
            }
        )
    return rows
