"""Monte Carlo experiments on ``R_t = Gamma_t f / lambda_t f``.

Each replicate is one Gamma path read off at every time of the schedule
(common random numbers across t).  Replicate ``r`` uses counter stream ``r``
under the key derived from ``master_seed``, so results do not depend on how the
replicates are chunked or how many worker threads run them.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import special, stats

from . import _kernels as K
from . import diagnostics
from .errors import DomainError, ExecutionError, UsageError
from .gamma_core import cell_integrals
from .integrands import parse

MODES = ("wlln", "lp", "slln", "dist_limit", "bridge")
MIN_DISTRIBUTIONAL_REPS = 100
MAX_CELLS = 20_000_000
MAX_WORK = 20_000_000_000  # cells x replicates
REPORT_COLUMNS = ("t", "statistic", "value", "stderr", "ci_low", "ci_high")


def _tuple(x, cast=float):
    if isinstance(x, str):
        x = [v for v in x.split(",") if v.strip()]
    if np.isscalar(x):
        x = [x]
    return tuple(cast(v) for v in x)


@dataclass(frozen=True)
class ExperimentConfig:
    integrand: str
    t_schedule: tuple = (10.0, 100.0)
    replicates: int = 1000
    master_seed: int = 0
    epsilon: float = 0.1
    p_list: tuple = (2.0,)
    mode: str = "wlln"
    grid_step: float | None = None
    s_list: tuple = (1.0,)
    tail_threshold: float = 0.05
    slln_threshold: float = 0.05
    max_bracket: float = 0.05
    lag: int = 1
    bridge_weights: str = "cell"
    cells_per_unit: int = 32
    graded_levels: int = 20

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("t_schedule", tuple(sorted(set(_tuple(self.t_schedule)))))
        set_("p_list", _tuple(self.p_list))
        set_("s_list", _tuple(self.s_list))
        set_("replicates", int(self.replicates))
        set_("master_seed", int(self.master_seed))
        set_("lag", int(self.lag))
        set_("cells_per_unit", int(self.cells_per_unit))
        set_("graded_levels", int(self.graded_levels))
        for k in ("epsilon", "tail_threshold", "slln_threshold", "max_bracket"):
            set_(k, float(getattr(self, k)))
        if self.grid_step is not None:
            set_("grid_step", float(self.grid_step))
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.t_schedule or min(self.t_schedule) <= 0:
            raise DomainError("t_schedule must be a nonempty list of positive times")
        if self.replicates < MIN_DISTRIBUTIONAL_REPS:
            raise DomainError(f"replicates must be >= {MIN_DISTRIBUTIONAL_REPS}")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be > 0")
        if any(p <= 0 for p in self.p_list):
            raise DomainError("moment orders must be > 0")
        if any(s < 0 for s in self.s_list):
            raise DomainError("Laplace arguments must be >= 0")
        if self.grid_step is not None and not self.grid_step > 0:
            raise DomainError("grid_step must be > 0")
        if self.lag < 1 or self.cells_per_unit < 1:
            raise DomainError("lag and cells_per_unit must be >= 1")
        if self.bridge_weights not in ("cell", "left", "right"):
            raise DomainError("bridge_weights must be cell, left or right")
        if not 0 <= self.master_seed < 2 ** 64:
            raise DomainError("master_seed must fit in 64 bits")
        parse(self.integrand)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @property
    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Estimate:
    t: float
    statistic: str
    value: float
    stderr: float
    ci_low: float = math.nan
    ci_high: float = math.nan


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class ConvergenceReport:
    mode: str
    integrand: str
    config: dict
    config_hash: str
    estimates: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def add(self, t, statistic, value, stderr, ci=(math.nan, math.nan)):
        self.estimates.append(Estimate(float(t), statistic, float(value), float(stderr),
                                       float(ci[0]), float(ci[1])))

    def get(self, statistic, t=None):
        for e in self.estimates:
            if e.statistic == statistic and (t is None or math.isclose(e.t, t)):
                return e
        raise KeyError((statistic, t))

    def series(self, statistic):
        es = [e for e in self.estimates if e.statistic == statistic]
        return np.array([e.t for e in es]), np.array([e.value for e in es])

    def to_dict(self):
        return _clean({
            "mode": self.mode, "integrand": self.integrand, "config_hash": self.config_hash,
            "config": self.config, "verdicts": self.verdicts, "notes": self.notes,
            "estimates": [asdict(e) for e in self.estimates],
        })

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for e in self.estimates:
            w.writerow([repr(e.t), e.statistic, repr(e.value), repr(e.stderr),
                        repr(e.ci_low), repr(e.ci_high)])
        return buf.getvalue()


# ------------------------------------------------------------- helpers ----

def geometric_schedule(t0=10.0, ratio=2.0, n=10):
    """``t0 * ratio**k`` for ``k < n``; the default SLLN schedule."""
    return tuple(float(t0) * float(ratio) ** np.arange(int(n)))


def wilson(k, n):
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _quantile_ci(x, q):
    # distribution-free order-statistic interval
    x = np.sort(x)
    n = x.size
    half = 1.96 * math.sqrt(n * q * (1 - q))
    lo = x[max(0, int(math.floor(n * q - half)))]
    hi = x[min(n - 1, int(math.ceil(n * q + half)))]
    return float(np.quantile(x, q)), (float(lo), float(hi))


def _jobs(jobs):
    return max(1, int(jobs or os.cpu_count() or 1))


def _chunks(n, jobs):
    size = max(1, min(2048, -(-n // (4 * jobs))))
    return [np.arange(a, min(n, a + size), dtype=np.int64) for a in range(0, n, size)]


def _run_chunks(fn, n, jobs):
    """Apply ``fn(streams)`` per chunk; results are concatenated in stream order."""
    parts = _chunks(n, jobs)
    if jobs == 1:
        out = [fn(p) for p in parts]
    else:
        with ThreadPoolExecutor(jobs) as ex:
            out = list(ex.map(fn, parts))
    return np.concatenate(out, axis=0)


def mc_step(f, horizon):
    """Default cell width: ``horizon / 2000``, capped at 1/8 for integrands with
    sub-unit structure (periodic factors, cut schedules, steps)."""
    h = float(horizon) / 2000.0
    if f.monotone == "none" or f.breakpoints(0.0, min(float(horizon), 4.0)):
        h = min(h, 0.125)
    return h


def mc_grid(f, horizon, extra=(), step=None, levels=20):
    """Nodes: a uniform lattice, the schedule, breakpoints of ``f`` and a dyadic
    refinement after every singular point."""
    h = mc_step(f, horizon) if step is None else float(step)
    if horizon / h > MAX_CELLS:
        raise ExecutionError(f"grid of {horizon / h:.3g} cells exceeds the limit {MAX_CELLS}")
    parts = [np.arange(0.0, horizon, h), np.asarray(extra, float), [horizon]]
    parts.append(np.asarray(f.breakpoints(0.0, horizon), float))
    sing = getattr(f, "singular_points", None)
    if sing is not None:
        pts = np.asarray(sing(0.0, horizon), float)
        if pts.size:
            parts.append((pts[:, None] + h * 2.0 ** -np.arange(1, levels + 1)).ravel())
    nodes = np.unique(np.concatenate(parts))
    nodes = nodes[(nodes >= 0) & (nodes <= horizon)]
    if nodes[0] != 0.0:
        nodes = np.concatenate([[0.0], nodes])
    return nodes


def _expected_bracket(f, nodes, masses):
    """``E(upper - lower) / lambda`` of the endpoint bracket at each node."""
    fx = f(nodes)
    width = np.abs(np.diff(fx)) * np.diff(nodes)
    return np.cumsum(width) / np.cumsum(masses)


@dataclass
class _Design:
    nodes: np.ndarray
    masses: np.ndarray
    weights: np.ndarray
    record: np.ndarray
    lam: np.ndarray


def _design(f, cfg):
    ts = np.asarray(cfg.t_schedule)
    step = cfg.grid_step
    for _ in range(5):
        nodes = mc_grid(f, ts[-1], ts, step, cfg.graded_levels)
        masses = cell_integrals(f, nodes)
        if not np.all(np.isfinite(masses)):
            raise ExecutionError(f"cell masses of {f.id} overflow on [0, {ts[-1]:g}]")
        record = np.searchsorted(nodes, ts)
        lam = np.cumsum(masses)[record - 1]
        if np.any(lam <= 0):
            raise DomainError("lambda_t f must be > 0 on the schedule")
        if f.monotone in ("increasing", "decreasing"):
            rel = _expected_bracket(f, nodes, masses)[record - 1]
            if np.max(rel) > cfg.max_bracket:
                step = 0.5 * (step or mc_step(f, ts[-1]))
                continue
        widths = np.diff(nodes)
        if widths.size * cfg.replicates > MAX_WORK:
            raise ExecutionError("requested grid x replicates exceeds the work limit")
        return _Design(nodes, masses, (masses / widths)[None, :], record, lam)
    raise ExecutionError(f"integral bracket wider than {cfg.max_bracket} after refinement")


def simulate_ratios(f, cfg, jobs=None):
    """``(replicates, len(t_schedule))`` array of ``R_t`` with cell-mean weights."""
    d = _design(f, cfg)
    k0, k1 = K.split_key(cfg.master_seed)
    widths = np.diff(d.nodes)

    def work(streams):
        return K.weighted_partial_sums(widths, d.weights, d.record, streams, k0, k1)[:, 0, :]

    sums = _run_chunks(work, cfg.replicates, _jobs(jobs))
    return sums / d.lam, d


def _report(cfg):
    return ConvergenceReport(cfg.mode, cfg.integrand, cfg.to_dict(), cfg.hash)


def _check_mode(cfg, mode):
    if cfg.mode != mode:
        raise UsageError(f"config mode is {cfg.mode!r}, expected {mode!r}")


def _tail_estimates(rep, ts, R, eps, name="tail_prob"):
    n = R.shape[0]
    probs, his, los = [], [], []
    for j, t in enumerate(ts):
        k = int(np.sum(np.abs(R[:, j] - 1) > eps))
        p = k / n
        ci = wilson(k, n)
        rep.add(t, name, p, math.sqrt(p * (1 - p) / n), ci)
        probs.append(p)
        los.append(ci[0])
        his.append(ci[1])
    return np.array(probs), np.array(los), np.array(his)


def wlln_verdict(probs, lows, threshold):
    """``holds`` when the tail probability ends below ``threshold`` and has
    decreased; ``fails`` when its lower confidence bound stays above it without
    shrinking; otherwise ``undecided``."""
    shrinking = probs.size == 1 or probs[-1] < probs[0]
    if probs[-1] < threshold and shrinking:
        return "holds"
    if probs.size > 1 and lows[-1] > threshold and probs[-1] >= 0.5 * probs[0]:
        return "fails"
    return "undecided"


# ----------------------------------------------------------- experiments --

def run_wlln(config, jobs=None):
    """Tail probabilities ``P(|R_t - 1| > eps)`` with Wilson intervals."""
    _check_mode(config, "wlln")
    f = parse(config.integrand)
    R, _ = simulate_ratios(f, config, jobs)
    rep = _report(config)
    ts = config.t_schedule
    probs, lows, _ = _tail_estimates(rep, ts, R, config.epsilon)
    for j, t in enumerate(ts):
        m, se = _mean_se((R[:, j] - 1) ** 2)
        rep.add(t, "mean_sq_dev", m, se)
        m, se = _mean_se(R[:, j])
        rep.add(t, "mean_ratio", m, se)
    rep.verdicts["wlln"] = wlln_verdict(probs, lows, config.tail_threshold)
    return rep


def run_lp(config, jobs=None):
    """``E|R_t - 1|^p`` with standard errors; integer orders are cross-checked
    against the cumulant closed forms."""
    _check_mode(config, "lp")
    f = parse(config.integrand)
    R, _ = simulate_ratios(f, config, jobs)
    rep = _report(config)
    ts = config.t_schedule
    pmax = max([int(p) for p in config.p_list if float(p).is_integer()] + [2])
    agree = {}
    for j, t in enumerate(ts):
        dev = R[:, j] - 1
        try:
            exact = diagnostics.exact_central_moments(f, t, pmax)
        except Exception:  # divergent f^p integrals: no oracle
            exact = None
        for p in config.p_list:
            m, se = _mean_se(np.abs(dev) ** p)
            rep.add(t, f"abs_moment_{p:g}", m, se)
            if not float(p).is_integer() or p < 2:
                continue
            ip = int(p)
            m, se = _mean_se(dev ** ip)
            rep.add(t, f"central_moment_{ip}", m, se)
            if exact is not None:
                ex = float(exact[ip - 2])
                rep.add(t, f"exact_central_moment_{ip}", ex, 0.0)
                z = (m - ex) / se if se > 0 else 0.0
                rep.add(t, f"zscore_{ip}", z, 0.0)
                agree[f"{ip}@{t:g}"] = bool(abs(z) <= 3)
    for p in config.p_list:
        _, y = rep.series(f"abs_moment_{p:g}")
        rep.verdicts[f"lp_{p:g}"] = "decreasing" if y.size > 1 and y[-1] < 0.5 * y[0] else "flat"
    rep.verdicts["oracle_within_3se"] = all(agree.values()) if agree else None
    rep.notes["oracle_checks"] = agree
    return rep


def run_slln(config, jobs=None):
    """Quantiles across replicates of ``sup_{u >= T} |R_u - 1|`` along one path."""
    _check_mode(config, "slln")
    f = parse(config.integrand)
    R, _ = simulate_ratios(f, config, jobs)
    rep = _report(config)
    ts = config.t_schedule
    tail = np.maximum.accumulate(np.abs(R - 1)[:, ::-1], axis=1)[:, ::-1]
    q95 = []
    for j, t in enumerate(ts):
        for q in (0.5, 0.95):
            val, ci = _quantile_ci(tail[:, j], q)
            rep.add(t, f"tail_sup_q{int(q * 100)}", val, (ci[1] - ci[0]) / (2 * 1.96), ci)
            if q == 0.95:
                q95.append(val)
    q95 = np.array(q95)
    ok = q95[-1] < config.slln_threshold and (q95.size == 1 or q95[-1] < q95[0])
    rep.verdicts["slln"] = "consistent" if ok else "inconclusive"
    rep.notes["schedule_relative"] = f.monotone == "none"
    return rep


def laplace_target(s):
    """``E exp(-s Gamma(1/e)) = exp(Li_2(-s))``."""
    return np.exp(special.spence(1.0 + np.asarray(s, dtype=float)))


CENTERED_SKEW = (2.0 / 3.0) / 0.5 ** 1.5


def run_dist_limit_exponential(config, jobs=None):
    """Empirical Laplace transform of ``R_t`` for ``f = e^x`` against the Thorin
    limit, the centred variant and a two-sample KS check across times."""
    _check_mode(config, "dist_limit")
    f = parse(config.integrand)
    if f.id != "pure_exp":
        raise UsageError("the distributional limit is implemented for pure_exp only")
    R, _ = simulate_ratios(f, config, jobs)
    rep = _report(config)
    ts = config.t_schedule
    ok = []
    for j, t in enumerate(ts):
        lam = math.expm1(t)
        sigma = math.sqrt(math.expm1(2 * t) / 2)
        Z = (R[:, j] - 1) * (lam / sigma)
        for s in config.s_list:
            m, se = _mean_se(np.exp(-s * R[:, j]))
            target = float(laplace_target(s))
            rep.add(t, f"laplace_{s:g}", m, se)
            rep.add(t, f"laplace_target_{s:g}", target, 0.0)
            z = (m - target) / se if se > 0 else 0.0
            rep.add(t, f"laplace_zscore_{s:g}", z, 0.0)
            ok.append(abs(z) <= 3 or (s == 0 and m == 1.0))
            a = s * math.sqrt(2)
            m, se = _mean_se(np.exp(-s * Z))
            rep.add(t, f"centered_laplace_{s:g}", m, se)
            rep.add(t, f"centered_laplace_target_{s:g}", math.exp(a + special.spence(1 + a)), 0.0)
        n = Z.size
        skew = float(stats.skew(Z))
        rep.add(t, "centered_skewness", skew, math.sqrt(6.0 / n))
    rep.add(ts[-1], "centered_skewness_target", CENTERED_SKEW, 0.0)
    rep.verdicts["laplace_within_3se"] = bool(all(ok))
    if len(ts) >= 2:
        half = R.shape[0] // 2
        a, b = R[:half, -2], R[half:, -1]
        res = stats.ks_2samp(a, b)
        thr = 1.358 * math.sqrt((a.size + b.size) / (a.size * b.size))
        rep.add(ts[-1], "ks_distance", res.statistic, 0.0)
        rep.add(ts[-1], "ks_threshold", thr, 0.0)
        rep.add(ts[-1], "ks_pvalue", res.pvalue, 0.0)
        rep.verdicts["ks_stable"] = bool(res.statistic < thr)
    return rep


# --------------------------------------------------------------- bridge ----

def _bridge_nodes(cfg, q):
    ts = np.asarray(cfg.t_schedule)
    top = q * (math.floor(ts[-1] / q) + 1)
    m = cfg.cells_per_unit
    fine = np.arange(0, int(round(top * m)) + 1) / m
    nodes = np.unique(np.concatenate([fine, ts, np.arange(0, top + q, q)]))
    return nodes[nodes <= top]


def run_bridge(config, jobs=None):
    """Couple ``R_t`` with the discrete weighted sums of the same path's cell
    masses ``X_k`` (cells of width ``lag``) and check the pathwise sandwich."""
    _check_mode(config, "bridge")
    f = parse(config.integrand)
    if f.monotone not in ("increasing", "decreasing", "constant"):
        raise UsageError(f"{f.id} has no monotonicity metadata; the bridge needs monotone f")
    q = config.lag
    nodes = _bridge_nodes(config, q)
    if nodes.size > MAX_CELLS:
        raise ExecutionError("bridge grid too large")
    widths = np.diff(nodes)
    masses = cell_integrals(f, nodes)
    avg = masses / widths
    fx = f(nodes)
    f_lo, f_hi = np.minimum(fx[:-1], fx[1:]), np.maximum(fx[:-1], fx[1:])
    k0, k1 = K.split_key(config.master_seed)
    inc = f.monotone == "increasing"

    plan = []
    for t in config.t_schedule:
        n = int(math.floor(t / q + 1e-12))
        if n < 2:
            raise DomainError("bridge needs at least two discrete cells below t")
        ks = np.arange(n + 2) * q
        it = int(np.searchsorted(nodes, t))
        ik = np.searchsorted(nodes, ks)
        lam_t = float(np.sum(masses[:it]))
        lam_k = np.concatenate([[0.0], np.cumsum(masses)])[ik]
        fk = f(ks.astype(float))
        if config.bridge_weights == "cell":
            w = np.diff(lam_k)[:n]
        elif config.bridge_weights == "right":
            w = fk[1:n + 1]
        else:
            w = fk[:n]
        plan.append(dict(t=t, n=n, it=it, ik=ik, lam_t=lam_t, lam_k=lam_k, fk=fk,
                         ft=float(f(np.asarray(t))), w=w))

    def work(streams):
        M = K.gamma_matrix(widths, 0, streams, k0, k1)
        C = np.concatenate([np.zeros((M.shape[0], 1)), np.cumsum(M, axis=1)], axis=1)
        cols = []
        for p in plan:
            n, it, lam_t, fk = p["n"], p["it"], p["lam_t"], p["fk"]
            lo = M[:, :it] @ f_lo[:it] / lam_t
            hi = M[:, :it] @ f_hi[:it] / lam_t
            cont = M[:, :it] @ avg[:it] / lam_t
            X = np.diff(C[:, p["ik"]], axis=1)  # X_1 .. X_{n+1}
            Y = C[:, it] - C[:, p["ik"][n]]
            left = X[:, :n] @ fk[:n]
            right = X[:, :n] @ fk[1:n + 1]
            if inc:
                L = (left + fk[n] * Y) / lam_t
                U = (right + p["ft"] * Y) / lam_t
            else:
                L = (right + p["ft"] * Y) / lam_t
                U = (left + fk[n] * Y) / lam_t
            disc = X[:, :n] @ p["w"] / (q * p["w"].sum())
            pl, pu = _simple_bounds(p, X, inc) if q == 1 else (np.full_like(lo, np.nan),) * 2
            cols.append(np.stack([lo, hi, cont, L, U, disc, pl, pu], axis=1))
        return np.stack(cols, axis=1)

    A = _run_chunks(work, config.replicates, _jobs(jobs))
    rep = _report(config)
    tol = 1e-9
    ts = config.t_schedule
    cont_all = A[:, :, 2]
    disc_all = A[:, :, 5]
    pass_all = True
    for j, t in enumerate(ts):
        lo, hi, cont, L, U, disc, pl, pu = A[:, j, :].T
        scale = np.maximum(1.0, np.abs(hi))
        slack = np.maximum(L - hi, lo - U) / scale
        ok = slack <= tol
        n = ok.size
        rep.add(t, "sandwich_pass_rate", ok.mean(), math.sqrt(ok.mean() * (1 - ok.mean()) / n),
                wilson(ok.sum(), n))
        rep.add(t, "max_slack", max(0.0, float(slack.max())), 0.0)
        rep.add(t, "max_bracket_width", float(np.max(hi - lo)), 0.0)
        if q == 1:
            pok = (pl <= hi + tol * scale) & (lo <= pu + tol * scale)
            rep.add(t, "simple_sandwich_pass_rate", pok.mean(),
                    math.sqrt(pok.mean() * (1 - pok.mean()) / n), wilson(pok.sum(), n))
        pass_all &= bool(ok.all())
    pc, lc, _ = _tail_estimates(rep, ts, cont_all, config.epsilon, "tail_prob_continuous")
    pd, ld, _ = _tail_estimates(rep, ts, disc_all, config.epsilon, "tail_prob_discrete")
    vc = wlln_verdict(pc, lc, config.tail_threshold)
    vd = wlln_verdict(pd, ld, config.tail_threshold)
    rep.verdicts.update(sandwich="holds" if pass_all else "violated", wlln_continuous=vc,
                        wlln_discrete=vd, pipelines_agree=vc == vd)
    rep.notes["increasing"] = inc
    return rep


def _simple_bounds(p, X, inc):
    """The bracket in the form written with R_n, R'_{n-1}, b_n and d_n."""
    n, fk, lam_k = p["n"], p["fk"], p["lam_k"]
    Xn = X[:, :n]  # X_1..X_n
    if inc:
        Rn = Xn @ fk[1:n + 1] / fk[1:n + 1].sum()
        Rp = X[:, 1:n] @ fk[1:n] / fk[1:n].sum()  # sum_{k<n} f_k X_{k+1}
        b_n = fk[n] / lam_k[n]
        d_n = fk[n + 1] / lam_k[n]
        d_prev = fk[n] / lam_k[n - 1]
        return Rp / (1 + d_prev), Rn / (1 - b_n) + d_n * X[:, n]
    Rn = Xn @ fk[1:n + 1] / fk[1:n + 1].sum()
    Rp = Xn @ fk[:n] / fk[:n].sum()  # sum_{j<n} f_j X_{j+1}
    b_n = fk[n] / lam_k[n]
    return Rn, Rp / (1 - b_n) + b_n * X[:, n]


RUNNERS = {
    "wlln": run_wlln,
    "lp": run_lp,
    "slln": run_slln,
    "dist_limit": run_dist_limit_exponential,
    "bridge": run_bridge,
}


def run(config, jobs=None):
    return RUNNERS[config.mode](config, jobs)
