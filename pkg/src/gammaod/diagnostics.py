"""Deterministic characteristics of an integrand and the criteria built on them.

Quantities are computed in log space (``ln lambda_t f^p``) so that fast-growing
integrands can be followed to ``t = 1e6`` without overflow.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from . import quadrature
from .errors import DomainError, QuadratureError, UsageError
from .integrands import DECREASING, INCREASING, CONSTANT, NONE, FromB, BStep, quad_log_lambda

DIAG_COLUMNS = ("t", "lambda", "lambda2", "v", "b", "ell", "d", "h")


@dataclass(frozen=True)
class Thresholds:
    """Operational meaning of "tends to 0" and "bounded away from 0"."""

    vanish_final: float = 1e-2
    flat_final: float = 1e-1
    flat_slope: float = 0.02
    last_decade: float = 10.0


DEFAULT_THRESHOLDS = Thresholds()


def _exp(x):
    return math.exp(x) if x < 709.0 else math.inf


def lambda_p(f, t, p=1.0, tol=quadrature.DEFAULT_TOL):
    """``int_0^t f^p`` (closed form when available, else adaptive quadrature)."""
    if not t > 0:
        raise DomainError("t must be > 0")
    return f.lambda_p(t, p, tol)


def log_lambda_p(f, t, p=1.0, tol=quadrature.DEFAULT_TOL):
    if not t > 0:
        raise DomainError("t must be > 0")
    return f.log_lambda(t, p, tol)


def _log_window(f, a, b, tol=quadrature.DEFAULT_TOL):
    """``ln int_a^b f`` computed directly on the short window."""
    if a <= 0:
        return f.log_lambda(b, 1.0, tol)
    exact = getattr(f, "cell_integrals", None)
    if exact is not None:
        w = float(exact(np.array([a, b]), 1.0)[0])
        return math.log(w) if w > 0 else -math.inf
    if f.log_primitive(b, 1.0) is not None:
        hi, lo = f.log_lambda(b, 1.0, tol), f.log_lambda(a, 1.0, tol)
        if hi - lo > 1e-3:
            return hi + math.log(-math.expm1(lo - hi))
    return quad_log_lambda(f, b, 1.0, tol, a=a)


# --------------------------------------------------------------- series --

@dataclass
class DiagnosticSeries:
    t: np.ndarray
    log_lambda: np.ndarray
    log_lambda2: np.ndarray
    v: np.ndarray
    b: np.ndarray
    ell: np.ndarray
    d: np.ndarray
    h: np.ndarray
    h_analytic: bool = True
    integrand: str = ""

    @property
    def lambda_(self):
        return np.array([_exp(x) for x in self.log_lambda])

    @property
    def lambda2(self):
        return np.array([_exp(x) for x in self.log_lambda2])

    def columns(self):
        return {"t": self.t, "lambda": self.lambda_, "lambda2": self.lambda2, "v": self.v,
                "b": self.b, "ell": self.ell, "d": self.d, "h": self.h}

    def to_csv(self, fh=None):
        """Write the stable ``t,lambda,lambda2,v,b,ell,d,h`` table; returns text if no handle."""
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(DIAG_COLUMNS)
        cols = self.columns()
        for i in range(self.t.size):
            w.writerow([repr(float(cols[c][i])) for c in DIAG_COLUMNS])
        return out.getvalue() if fh is None else None


def diagnostic_series(f, t_schedule, tol=quadrature.DEFAULT_TOL):
    ts = np.asarray(t_schedule, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(np.diff(ts) <= 0):
        raise DomainError("schedule must be a strictly increasing sequence")
    if ts[0] <= 1:
        raise DomainError("schedule must start above 1 so that ell_t is defined")
    n = ts.size
    L1, L2, ell, v, b, d, h = (np.empty(n) for _ in range(7))
    for i, t in enumerate(ts):
        L1[i] = f.log_lambda(t, 1.0, tol)
        if L1[i] == -math.inf:
            raise DomainError(f"lambda_t f = 0 at t={t:g}")
        try:
            L2[i] = f.log_lambda(t, 2.0, tol)
        except QuadratureError:
            L2[i] = math.inf
        # 1 - ell_t from the last unit window, for accuracy when ell is close to 1
        one_minus = _exp(_log_window(f, t - 1.0, t, tol) - L1[i])
        ell[i] = 1.0 - one_minus
    with np.errstate(over="ignore", invalid="ignore"):
        v = np.exp(np.minimum(L2 - 2 * L1, 709.0))
        v[np.isinf(L2)] = np.inf
        b = np.exp(np.minimum(f.log(ts) - L1, 709.0))
        d = np.exp(np.minimum(f.log(ts + 1.0) - L1, 709.0))
    if f.h_available:
        h = np.asarray(f.dlog(ts), dtype=float)
        analytic = True
    else:
        step = 1e-4 * ts
        with np.errstate(invalid="ignore"):
            h = (f.log(ts + step) - f.log(ts - step)) / (2 * step)
        analytic = False
    return DiagnosticSeries(ts, L1, L2, v, b, ell, d, h, analytic, f.id)


# -------------------------------------------------------------- Laplace --

def _log1p_minus(z):
    """``ln(1 + z) - z`` without cancellation for small ``z``."""
    z = np.asarray(z, dtype=float)
    small = z < 1e-4
    out = np.empty_like(z)
    zs = z[small]
    out[small] = -zs * zs / 2 + zs ** 3 / 3 - zs ** 4 / 4
    zl = z[~small]
    out[~small] = np.log1p(zl) - zl
    return out


def laplace_deficit(f, t, s, tol=quadrature.DEFAULT_TOL):
    """``int_0^t ln(1 + s f / lambda_t f) dx - s``, integrated as ``int [ln(1+z) - z]``."""
    if not t > 0:
        raise DomainError("t must be > 0")
    if s < 0:
        raise DomainError("s must be >= 0")
    if s == 0:
        return 0.0
    L = f.log_lambda(t, 1.0, tol)
    if L == -math.inf:
        raise DomainError("lambda_t f = 0")
    ls = math.log(s) - L

    def phi(x):
        with np.errstate(over="ignore", divide="ignore"):
            z = np.exp(ls + f.log(np.asarray(x, dtype=float)))
        return float(_log1p_minus(np.atleast_1d(z))[0])

    if f.kind == "periodic_extension":
        n = math.floor(t)
        pts = f.base.cuts
        if f.base.singular:
            one = quadrature.integrate_graded(phi, 0.0, 1.0, epsrel=tol) if n else 0.0
            part = quadrature.integrate_graded(phi, 0.0, t - n, epsrel=tol)
        else:
            one = quadrature.integrate(phi, 0.0, 1.0, points=pts, epsrel=tol)[0] if n else 0.0
            part = quadrature.integrate(phi, 0.0, t - n, points=pts, epsrel=tol)[0]
        return n * one + part
    return _panel_integral(phi, 0.0, t, f.monotone, f.breakpoints(0.0, t), tol)


def _panel_integral(func, a, b, monotone, points, tol):
    """Doubling panels anchored where ``func`` concentrates; stops once negligible."""
    total = 0.0
    if monotone == INCREASING:
        right, w = b, 1.0
        while right > a:
            left = max(a, right - w)
            v, _ = quadrature.integrate(func, left, right, points=points, epsrel=tol, epsabs=1e-300)
            total += v
            if abs(func(left)) * (left - a) < 1e-3 * tol * abs(total):
                break
            right, w = left, 2 * w
        return total
    left, w = a, 1.0
    while left < b:
        right = min(b, left + w)
        v, _ = quadrature.integrate(func, left, right, points=points, epsrel=tol, epsabs=1e-300)
        total += v
        left, w = right, 2 * w
    return total


def laplace_limit_exponential(s):
    """``-int_0^inf ln(1 + s e^-u) du = Li_2(-s)``: log-Laplace of the e^x limit law."""
    return float(special.spence(1.0 + s))


# -------------------------------------------------------------- moments --

def exact_central_moments(f, t, n_max=4, tol=quadrature.DEFAULT_TOL):
    """``E(R_t - 1)^n`` for ``n = 2..n_max`` from cumulants ``(n-1)! m_n``."""
    n_max = int(n_max)
    if n_max < 2:
        raise DomainError("n_max must be >= 2")
    L1 = f.log_lambda(t, 1.0, tol)
    kappa = [0.0, 0.0]
    for n in range(2, n_max + 1):
        Ln = f.log_lambda(t, float(n), tol)
        if not math.isfinite(Ln):
            raise QuadratureError(f"int f^{n} diverges on [0, {t:g}]", math.inf)
        kappa.append(math.factorial(n - 1) * math.exp(Ln - n * L1))
    mu = [1.0, 0.0]
    for n in range(2, n_max + 1):
        mu.append(sum(math.comb(n - 1, k) * kappa[n - k] * mu[k] for k in range(n - 1)))
    return np.array(mu[2:])


# -------------------------------------------------------------- audit ----

@dataclass(frozen=True)
class AuditEntry:
    inequality: str
    max_violation: float
    points: int

    def __iter__(self):
        return iter((self.inequality, self.max_violation))


def _discrete_endpoint(f, ns):
    """``ln W_n = ln sum_{k<=n} f(k)`` at integers ``ns`` (endpoint weights)."""
    top = int(max(ns))
    k = np.arange(1, top + 1, dtype=float)
    lw = np.logaddexp.accumulate(f.log(k))
    return lw[np.asarray(ns, dtype=int) - 1]


def inequality_audit(f, t_schedule, families=None, tol=quadrature.DEFAULT_TOL):
    """Max signed violation (``lhs - rhs`` of ``lhs <= rhs``) per inequality.

    Families: ``a`` (lag-1 ratio bounds), ``b`` (the ``d_t`` lemma), ``c``
    (``b_t <= 2 v_t`` for ``f = b e^B`` with ``b`` decreasing to 0) and ``d``
    (discrete endpoint weights).  Decreasing integrands get mirrored forms.
    """
    if f.monotone == NONE:
        raise UsageError(f"{f.id}: the audit needs monotonicity metadata")
    c_ok = isinstance(f, FromB) and not isinstance(f.bspec, BStep) and f.rates.get("b") is not None \
        and f.rates["b"].t_exp < 0
    if families is None:
        families = ("a", "b", "d") + (("c",) if c_ok else ())
    if "c" in families and not c_ok:
        raise UsageError(f"{f.id}: family (c) needs f = b e^B with b decreasing to 0")

    ts = np.asarray(t_schedule, dtype=float)
    s0 = diagnostic_series(f, ts, tol)
    s1 = diagnostic_series(f, ts + 1.0, tol)
    one_l0 = 1.0 - s0.ell
    one_l1 = 1.0 - s1.ell
    inc = f.monotone in (INCREASING, CONSTANT)
    out = []

    def add(name, lhs, rhs, mask=None):
        viol = np.asarray(lhs - rhs, dtype=float)
        if mask is not None:
            viol = viol[mask]
        m = float(np.max(viol)) if viol.size else -math.inf
        out.append(AuditEntry(name, m, int(viol.size)))

    if "a" in families:
        if inc:
            add("a1: b_t/(1+b_t) <= 1-ell_{t+1}", s0.b / (1 + s0.b), one_l1)
            add("a2: 1-ell_t <= b_t", one_l0, s0.b)
        else:
            add("a1': b_{t+1} <= 1-ell_{t+1}", s1.b, one_l1)
            add("a2': 1-ell_{t+1} <= b_t", one_l1, s0.b)
    if "b" in families:
        if inc:
            add("b1: b_t <= d_t", s0.b, s0.d)
            with np.errstate(divide="ignore"):
                rhs = s1.b / (1 - s1.b)
            add("b2: d_t <= b_{t+1}/(1-b_{t+1})", s0.d, rhs, mask=s1.b < 1)
        else:
            add("b1': d_t <= b_t", s0.d, s0.b)
    if "c" in families:
        add("c: b_t <= 2 v_t", s0.b, 2 * s0.v)
    if "d" in families:
        ns = np.unique(np.floor(ts).astype(int))
        ns = ns[ns >= 2]
        if ns.size:
            lw = _discrete_endpoint(f, ns)
            lw_prev = _discrete_endpoint(f, ns - 1)
            lf = f.log(ns.astype(float))
            L = np.array([f.log_lambda(float(n), 1.0, tol) for n in ns])
            bd = np.exp(lf - lw)
            bn = np.exp(lf - L)
            if inc:
                add("d1: b_n^(d) <= b_n", bd, bn)
                # b_n <= f_n / W_{n-1} = b^(d)/(1 - b^(d))
                add("d2: b_n <= b_n^(d)/(1-b_n^(d))", bn, np.exp(lf - lw_prev))
            else:
                # lambda_n - f_0 + f_n <= W_n <= lambda_n for decreasing f
                lf0 = float(f.log(np.asarray(0.0)))
                add("d1': b_n <= b_n^(d)", bn, bd)
                with np.errstate(divide="ignore", invalid="ignore"):
                    den = L + np.log1p(np.exp(lf - L) - np.exp(lf0 - L))
                ok = np.isfinite(den)
                add("d2': b_n^(d) <= f_n/(lambda_n - f_0 + f_n)", bd, np.exp(lf - den), mask=ok)
    return out


# ------------------------------------------------------------ fitting ----

@dataclass(frozen=True)
class FitResult:
    exponent: float
    log_exponent: float
    constant: float
    residual: float
    model: str
    log_order: int = 1


def _iterlog(t, m):
    y = np.asarray(t, dtype=float)
    for _ in range(m):
        y = np.log(y)
    return y


def fit_rate(t, y, model="power", log_order=1, fixed_exponent=None):
    """Least squares for ``ln y = ln C + a ln t (+ e ln ln_m t)``.

    With ``fixed_exponent`` the t-exponent is held at the given value and only
    the log exponent (and constant) are fitted.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 8 or t.max() / t.min() < 100:
        raise DomainError("fit needs >= 8 points spanning >= 2 decades")
    if np.any(~(y > 0)) or np.any(~np.isfinite(y)):
        raise DomainError("fit needs positive finite values")
    ly = np.log(y)
    cols = [np.ones_like(t)]
    if fixed_exponent is None:
        cols.append(np.log(t))
    else:
        ly = ly - fixed_exponent * np.log(t)
    if model == "power_times_logpower":
        cols.append(np.log(_iterlog(t, log_order)))
    elif model != "power":
        raise DomainError(f"unknown model {model!r}")
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.max(np.abs(A @ coef - ly)))
    c = float(np.exp(coef[0]))
    if fixed_exponent is None:
        a = float(coef[1])
        e = float(coef[2]) if model == "power_times_logpower" else 0.0
    else:
        a = float(fixed_exponent)
        e = float(coef[1]) if model == "power_times_logpower" else 0.0
    return FitResult(a, e, c, resid, model, log_order)


def tail_slope(t, y, decade=10.0):
    """Log-log slope over the last ``decade`` of the schedule."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = t >= t[-1] / decade
    if sel.sum() < 2:
        sel = slice(-2, None)
    return float(np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)[0])


def tends_to_zero(t, y, th=DEFAULT_THRESHOLDS):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        return False
    tail = y[t >= t[-1] / th.last_decade]
    return bool(tail.size >= 2 and np.all(np.diff(tail) < 0) and y[-1] < th.vanish_final)


def bounded_away(t, y, th=DEFAULT_THRESHOLDS):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        return True  # infinite (f not square-integrable) is trivially not vanishing
    return bool(y[-1] > th.flat_final and abs(tail_slope(t, y, th.last_decade)) < th.flat_slope)


# --------------------------------------------------------- classifiers ---

@dataclass
class ClassifierVerdict:
    criterion: str
    verdict: str  # holds | fails | undecided | not-applicable
    witness: dict = field(default_factory=dict)

    def to_dict(self):
        return {"criterion": self.criterion, "verdict": self.verdict, "witness": _jsonable(self.witness)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def probe_schedule(probe_horizon=1e6, start=10.0, points=48):
    return np.geomspace(start, probe_horizon, points)


def classify_wlln(f, t_schedule=None, th=DEFAULT_THRESHOLDS):
    """``holds`` if ``v_t -> 0`` numerically, ``fails`` if ``v_t`` stays flat."""
    ts = probe_schedule() if t_schedule is None else np.asarray(t_schedule, dtype=float)
    s = diagnostic_series(f, ts)
    w = {"final_v": s.v[-1], "horizon": ts[-1]}
    if np.all(np.isfinite(s.v)):
        w["tail_slope"] = tail_slope(ts, s.v, th.last_decade)
    if tends_to_zero(ts, s.v, th):
        return ClassifierVerdict("wlln_v", "holds", w)
    if bounded_away(ts, s.v, th):
        return ClassifierVerdict("wlln_v", "fails", w)
    return ClassifierVerdict("wlln_v", "undecided", w)


def K2_exponential(x):
    """``K_2(x) = int_0^x u P(|Y| > u) du`` for ``Y = X - 1``, ``X ~ Exp(1)``."""
    x = float(x)
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 0.5
    e1 = math.exp(-1.0)
    right = e1 * (1.0 - (1.0 + x) * math.exp(-x))
    m = min(x, 1.0)
    left = m * m / 2.0 - e1 * ((m - 1.0) * math.exp(m) + 1.0)
    return right + left


def _tail_from_rate(rate, kind):
    """Convergence of ``sum_n g(b_n)`` from ``b_n ~ c n^a (ln_m n)^e``.

    ``kind``: ``"sq"`` (g = b^2), ``"exp"`` (g = e^{-1/b}), ``"univ"`` (t b bounded),
    ``"vlog"`` (v ln n -> 0, given the v rate), ``"tv"`` (t v bounded).
    Returns True/False, or None on a genuinely borderline case.
    """
    c, a, e, m = rate.coef, rate.t_exp, rate.log_exp, rate.log_order
    if kind == "sq":
        if 2 * a != -1:
            return 2 * a < -1
        return bool(m == 1 and 2 * e < -1)
    if kind == "exp":
        if a < 0:
            return True
        if a > 0 or e >= 0:
            return False
        if m > 1 or -e < 1:
            return False
        if -e > 1:
            return True
        return None if c == 1 else c < 1  # e^{-ln n / c} = n^{-1/c}
    if kind in ("univ", "tv"):
        if a != -1:
            return a < -1
        return e <= 0
    if kind == "vlog":
        if a != 0:
            return a < 0
        if m > 1:
            return False
        return e < -1
    raise ValueError(kind)


def _numeric_rate(ts, y):
    fit = fit_rate(ts, y, "power_times_logpower")
    from .integrands import Rate
    return Rate(fit.constant, round(fit.exponent * 20) / 20, round(fit.log_exponent * 4) / 4), fit


def _partial_integral(ts, y):
    """Trapezoid on a log grid: ``int y dt`` over the schedule."""
    return float(integrate.trapezoid(y * ts, np.log(ts)))


def classify_slln(f, probe_horizon=1e6, p=2.0, q=2.0, th=DEFAULT_THRESHOLDS):
    """Sufficient conditions for the strong law; ``undecided`` when none applies.

    Raises UsageError when the hypothesis (increasing, or bounded and
    nonintegrable) fails or when ``b_t`` does not tend to 0 (no weak law).
    """
    increasing = f.monotone in (INCREASING, CONSTANT)
    bounded_ni = f.bounded and not f.integrable and f.monotone != NONE
    if not (increasing or bounded_ni):
        raise UsageError(f"{f.id}: needs an increasing or bounded nonintegrable integrand")
    ts = probe_schedule(probe_horizon)
    s = diagnostic_series(f, ts)
    rates = f.rates
    source = "catalog asymptotics"
    if "b" in rates:
        rb, rv = rates["b"], rates["v"]
    else:
        rb, fb = _numeric_rate(ts, s.b)
        rv, fv = _numeric_rate(ts, s.v)
        source = "numeric fit"
    if rb.t_exp >= 0 and rb.log_exp >= 0:
        raise UsageError(f"{f.id}: b_t does not tend to 0, so the weak law already fails")

    out = []

    def verdict(name, ok, witness):
        v = "undecided" if ok is None else ("holds" if ok else "fails")
        if source == "numeric fit" and v != "undecided":
            witness = dict(witness, caution="rates fitted, not catalogued")
        witness = dict(witness, rate_source=source, probe_horizon=probe_horizon)
        out.append(ClassifierVerdict(name, v, witness))

    b2 = s.b ** 2
    verdict("i", _tail_from_rate(rb, "sq"),
            {"partial_integral_b2": _partial_integral(ts, b2), "b_rate": rb.__dict__})
    ok_b = _tail_from_rate(rb, "exp")
    vrate2 = type(rv)(rv.coef, rv.t_exp, rv.log_exp, rv.log_order)
    ok_v = _tail_from_rate(vrate2, "exp")
    ok_ii = True if (ok_b or ok_v) else (None if (ok_b is None or ok_v is None) else False)
    with np.errstate(over="ignore"):
        eb = np.exp(-1.0 / s.b)
    verdict("ii", ok_ii, {"partial_integral_exp_b": _partial_integral(ts, eb),
                          "via_b": ok_b, "via_v": ok_v, "b_rate": rb.__dict__, "v_rate": rv.__dict__})
    tb = ts * s.b
    verdict("univ", _tail_from_rate(rb, "univ"), {"t_b_final": tb[-1], "t_b_max": float(tb.max())})
    vl = s.v * np.log(ts)
    verdict("cuzick_ii_prime", _tail_from_rate(rv, "vlog"), {"v_ln_t_final": vl[-1]})

    # (iii): t^{q-1} int f^q / F_t^q bounded
    lq = np.array([f.log_lambda(t, q) for t in ts])
    y3 = np.exp((q - 1) * np.log(ts) + lq - q * s.log_lambda)
    slope3 = tail_slope(ts, y3, th.last_decade)
    if q == 2 and "b" in rates:
        ok3 = _tail_from_rate(rv, "tv")
    else:
        ok3 = True if slope3 <= th.flat_slope else (False if slope3 > 2.5 * th.flat_slope else None)
    verdict("iii", ok3, {"p": p, "q": q, "final": y3[-1], "tail_slope": slope3})

    k2 = np.array([K2_exponential(1.0 / bb) if bb > 0 else 0.5 for bb in s.b])
    verdict("K2", _tail_from_rate(rb, "sq"),
            {"partial_integral": _partial_integral(ts, b2 * k2), "K2_final": k2[-1]})
    if bounded_ni:
        out.append(ClassifierVerdict("bounded", "holds", {"sup_f": float(f(np.asarray(0.0)))
                                                          if f.monotone == DECREASING else None}))
    overall = "holds" if any(c.verdict == "holds" for c in out) else "undecided"
    out.append(ClassifierVerdict("slln", overall, {"holding": [c.criterion for c in out
                                                               if c.verdict == "holds"]}))
    return out


def is_lnF_concave(f, t_schedule, refine=16, rtol=1e-9):
    """Concavity of ``ln lambda_t f`` from slopes of consecutive secants."""
    ts = np.asarray(t_schedule, dtype=float)
    if refine > 1:
        pieces = [np.linspace(a, b, refine + 1)[:-1] for a, b in zip(ts[:-1], ts[1:])]
        ts = np.concatenate(pieces + [ts[-1:]])
    B = np.array([f.log_lambda(t) for t in ts])
    slopes = np.diff(B) / np.diff(ts)
    rises = np.diff(slopes)
    with np.errstate(invalid="ignore"):
        rel = rises / np.maximum(np.abs(slopes[:-1]), 1e-300)
    # an undefined slope (lambda = 0 before the first cut) counts as a failure
    worst = float(np.max(np.where(np.isnan(rel), np.inf, rel))) if rises.size else 0.0
    verdict = "holds" if worst <= rtol else "fails"
    return ClassifierVerdict("lnF_concave", verdict, {"max_relative_slope_rise": worst,
                                                      "points": int(ts.size)})


# ------------------------------------------------------ class membership --

def class_membership(f, t_schedule, subsequence=None, th=DEFAULT_THRESHOLDS):
    """Numerical membership in V (v -> 0) and B (b -> 0).

    ``subsequence``: abscissas along which ``b`` is also probed (spikes).
    """
    ts = np.asarray(t_schedule, dtype=float)
    s = diagnostic_series(f, ts)
    in_v = tends_to_zero(ts, s.v, th)
    b_probe = s.b
    if subsequence is not None:
        sub = np.asarray(subsequence, dtype=float)
        b_sub = np.exp(f.log(sub) - np.array([f.log_lambda(t) for t in sub]))
        b_probe = b_sub
    else:
        b_sub = None
    in_b = tends_to_zero(ts, s.b, th) and (b_sub is None or b_sub[-1] < th.vanish_final)
    return {"V": bool(in_v), "B": bool(in_b), "v_final": float(s.v[-1]),
            "b_sub_min": float(np.min(b_probe)) if b_sub is not None else None,
            "series": s, "b_sub": b_sub}


# -------------------------------------------------------------- A.5 table --

@dataclass(frozen=True)
class ClaimedRow:
    label: str
    ident: str
    prefactor: tuple  # claimed int f^p / f^p ~ t^a (ln_m t)^e, as (a, e)
    vb: tuple  # claimed v_t ~ b_t
    h: tuple
    log_order: int = 1
    note: str = ""


def _claims():
    a2, a05l, a2l, a05e, aol, m = 2.0, 0.5, 2.0, 0.5, 2.0, 2
    return (
        ClaimedRow("t^alpha (alpha=2)", "power:2", (1.0, 0.0), (-1.0, 0.0), (-1.0, 0.0)),
        ClaimedRow("e^{ln^alpha t} (alpha=0.5)", "exp_log_power:0.5", (1.0, 0.0), (-1.0, 0.0),
                   (-1.0, a05l - 1.0), note="h_t departs from b_t by ln^{alpha-1} t"),
        ClaimedRow("e^{ln^alpha t} (alpha=2)", "exp_log_power:2", (1.0, 1.0 - a2l), (-1.0, a2l - 1.0),
                   (-1.0, a2l - 1.0)),
        ClaimedRow("e^{t^alpha} (alpha=0.5)", "exp_power:0.5", (1.0 - a05e, 0.0), (a05e - 1.0, 0.0),
                   (a05e - 1.0, 0.0)),
        ClaimedRow("e^{t ln^-alpha t} (alpha=2)", "exp_over_logpower:2", (0.0, aol), (0.0, -aol),
                   (0.0, -aol)),
        ClaimedRow("e^{t / ln_m t} (m=2)", "exp_over_iterlog:2", (0.0, 1.0), (0.0, -1.0), (0.0, -1.0),
                   log_order=m),
        ClaimedRow("t^-alpha e^t (alpha=1)", "poly_times_exp:1", (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)),
        ClaimedRow("e^t", "pure_exp", (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)),
    )


CLAIMED_ROWS = _claims()
TABLE_TOL = 0.05


def _fit_claim(ts, y, claim, log_order):
    """Plain power claims use the power model; claims with a log factor use the
    free two-exponent model.  Every claimed exponent must be matched."""
    a, e = claim
    if e == 0.0:
        fit = fit_rate(ts, y, "power")
        return fit, abs(fit.exponent - a) <= TABLE_TOL
    fit = fit_rate(ts, y, "power_times_logpower", log_order)
    return fit, abs(fit.exponent - a) <= TABLE_TOL and abs(fit.log_exponent - e) <= TABLE_TOL


def _top_decade_log_exp(ts, y, claim, log_order):
    """Log exponent over the last decade with the t-exponent held at its claim."""
    sel = ts >= ts[-1] / 10.0
    a, e = claim
    if e == 0.0:
        return float(np.polyfit(np.log(ts[sel]), np.log(y[sel]), 1)[0])
    ly = np.log(y[sel]) - a * np.log(ts[sel])
    return float(np.polyfit(np.log(_iterlog(ts[sel], log_order)), ly, 1)[0])


TABLE_COLUMNS = ("int_f^1", "int_f^2", "v", "b", "h")
CRITERION_COLUMNS = ("v", "h")


def a5_table(t_range=(1e2, 1e6), points=32, rows=CLAIMED_ROWS):
    """Fitted versus claimed exponents, one dict per (row, column).

    ``t`` is the argument of the table function; catalog entries realised with
    a shifted argument are evaluated at ``x = t - shift``.
    """
    from .integrands import parse

    ts = np.geomspace(t_range[0], t_range[1], points)
    cells = []
    for row in rows:
        f = parse(row.ident)
        xs = ts - f.shift
        s = diagnostic_series(f, xs)
        lf = f.log(xs)
        series = {
            "int_f^1": np.exp(s.log_lambda - lf),
            "int_f^2": np.exp(s.log_lambda2 - 2 * lf),
            "v": s.v,
            "b": s.b,
            "h": s.h,
        }
        claims = {"int_f^1": row.prefactor, "int_f^2": row.prefactor, "v": row.vb, "b": row.vb,
                  "h": row.h}
        for col in TABLE_COLUMNS:
            y = series[col]
            fit, ok = _fit_claim(ts, y, claims[col], row.log_order)
            cells.append({"row": row.label, "integrand": row.ident, "column": col,
                          "claimed_t_exp": claims[col][0], "claimed_log_exp": claims[col][1],
                          "log_order": row.log_order, "fitted_t_exp": fit.exponent,
                          "fitted_log_exp": fit.log_exponent, "model": fit.model,
                          "top_decade_exp": _top_decade_log_exp(ts, y, claims[col], row.log_order),
                          "residual": fit.residual, "pass": bool(ok), "note": row.note})
    return cells
