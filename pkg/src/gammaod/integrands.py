"""Catalog of positive integrands and the combinators that build new ones.

Every integrand is an immutable callable on ``[0, inf)`` that also knows

* ``log(x)``                 -- ``ln f(x)``, finite where ``f`` would overflow;
* ``log_lambda(t, p)``       -- ``ln int_0^t f^p`` (closed form when available);
* ``dlog(x)``                -- ``(ln f)'(x)`` when ``h_available``;
* ``monotone`` / ``bounded`` / ``integrable`` metadata;
* ``rates``                  -- leading asymptotics of ``b_t`` and ``v_t``.

Integrands are addressed by string identifiers such as ``power:2``,
``exp_power:0.5``, ``periodic:spike:0.3333333333333333`` or
``fstar:power:1@arith:2:1``; see :func:`parse` and :func:`catalog`.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import quadrature
from .errors import DomainError

CATALOG_VERSION = "1"
E = math.e

INCREASING = "increasing"
DECREASING = "decreasing"
CONSTANT = "constant"
NONE = "none"


def _fmt(x):
    x = float(x)
    return str(int(x)) if x == int(x) and abs(x) < 1e15 else repr(x)


def _as_array(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("integrands are defined on [0, inf); got a negative abscissa")
    return x


def _log_expm1(z):
    """``ln(e^z - 1)`` for ``z > 0`` without overflow."""
    z = float(z)
    if z <= 0:
        return -math.inf
    return z + math.log(-math.expm1(-z))


def _tower(m):
    y = 1.0
    for _ in range(m):
        y = math.exp(y)
    return y


def _iterlog(y, m):
    for _ in range(m):
        y = np.log(y)
    return y


@dataclass(frozen=True)
class Rate:
    """``coef * t**t_exp * (ln_m t)**log_exp`` with ``ln_m`` the m-fold logarithm."""

    coef: float
    t_exp: float
    log_exp: float = 0.0
    log_order: int = 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.coef * t ** self.t_exp
        if self.log_exp:
            out = out * _iterlog(t, self.log_order) ** self.log_exp
        return out


class Integrand:
    """Base class; subclasses fill in ``_eval``/``_log`` and the metadata."""

    kind = "abstract"
    monotone = NONE
    bounded = False
    integrable = False
    h_available = False
    shift = 0.0  # the table function g is realised as f(x) = g(x + shift)

    @property
    def id(self):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.id}>"

    def __eq__(self, other):
        return isinstance(other, Integrand) and other.id == self.id

    def __hash__(self):
        return hash(self.id)

    @property
    def is_increasing(self):
        return self.monotone in (INCREASING, CONSTANT)

    @property
    def is_decreasing(self):
        return self.monotone in (DECREASING, CONSTANT)

    def __call__(self, x):
        x = _as_array(x)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return self._eval(x)

    def log(self, x):
        x = _as_array(x)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return self._log(x)

    def _eval(self, x):
        return np.exp(self._log(x))

    def _log(self, x):
        return np.log(self._eval(x))

    def dlog(self, x):
        """``h(x) = (ln f)'(x)``."""
        raise NotImplementedError(f"{self.id}: no analytic log-derivative")

    def log_primitive(self, t, p=1.0):
        """Closed-form ``ln int_0^t f^p``, or ``None`` when there is none."""
        return None

    def primitive(self, t, p=1.0):
        lp = self.log_primitive(t, p)
        return None if lp is None else math.exp(lp)

    def breakpoints(self, a, b):
        return ()

    def log_lambda(self, t, p=1.0, tol=quadrature.DEFAULT_TOL):
        t = float(t)
        if t < 0:
            raise DomainError("t must be >= 0")
        if t == 0:
            return -math.inf
        lp = self.log_primitive(t, p)
        if lp is not None:
            return lp
        return quad_log_lambda(self, t, p, tol)

    def lambda_p(self, t, p=1.0, tol=quadrature.DEFAULT_TOL):
        lv = self.log_lambda(t, p, tol)
        return math.exp(lv) if lv < 709.0 else math.inf

    @property
    def rates(self):
        """Leading asymptotics ``{"b": Rate, "v": Rate}`` (empty if unknown)."""
        return {}


def quad_log_lambda(f, t, p=1.0, tol=quadrature.DEFAULT_TOL, a=0.0):
    """``ln int_a^t f^p`` by adaptive quadrature, ignoring closed forms."""
    rate = None
    if f.h_available and f.is_increasing:
        rate = p * max(float(f.dlog(np.asarray(t))), 0.0)
    return quadrature.log_integrate(
        f.log, a, float(t), p=p, monotone=f.monotone,
        points=tuple(f.breakpoints(a, t)), epsrel=tol, rate=rate)


# ---------------------------------------------------------------- A.5 rows --

class Power(Integrand):
    kind = "power"
    h_available = True

    def __init__(self, alpha):
        if alpha < 0:
            raise DomainError("power exponent must be >= 0")
        self.alpha = float(alpha)
        self.monotone = CONSTANT if alpha == 0 else INCREASING
        self.bounded = alpha == 0

    @property
    def id(self):
        return f"power:{_fmt(self.alpha)}"

    def _eval(self, x):
        return x ** self.alpha

    def _log(self, x):
        return self.alpha * np.log(x)

    def dlog(self, x):
        return self.alpha / np.asarray(x, dtype=float)

    def log_primitive(self, t, p=1.0):
        k = p * self.alpha + 1.0
        return k * math.log(t) - math.log(k)

    @property
    def rates(self):
        a = self.alpha
        return {"b": Rate(a + 1.0, -1.0), "v": Rate((a + 1.0) ** 2 / (2 * a + 1.0), -1.0)}


class ExpLogPower(Integrand):
    """``exp(ln^alpha (x + e))``."""

    kind = "exp_log_power"
    monotone = INCREASING
    h_available = True
    shift = E

    def __init__(self, alpha):
        if alpha <= 0:
            raise DomainError("alpha must be > 0")
        self.alpha = float(alpha)

    @property
    def id(self):
        return f"exp_log_power:{_fmt(self.alpha)}"

    def _log(self, x):
        return np.log(x + E) ** self.alpha

    def dlog(self, x):
        y = np.asarray(x, dtype=float) + E
        return self.alpha * np.log(y) ** (self.alpha - 1.0) / y

    def log_primitive(self, t, p=1.0):
        if self.alpha != 1.0:
            return None
        return math.log(((t + E) ** (p + 1.0) - E ** (p + 1.0)) / (p + 1.0))

    @property
    def rates(self):
        a = self.alpha
        if a < 1:
            return {"b": Rate(1.0, -1.0), "v": Rate(1.0, -1.0)}
        if a == 1:
            return {"b": Rate(2.0, -1.0), "v": Rate(4.0 / 3.0, -1.0)}
        return {"b": Rate(a, -1.0, a - 1.0), "v": Rate(a / 2.0, -1.0, a - 1.0)}


class ExpPower(Integrand):
    """``exp(x^alpha)``, ``0 < alpha <= 1``."""

    kind = "exp_power"
    monotone = INCREASING
    h_available = True

    def __init__(self, alpha):
        if not 0 < alpha <= 1:
            raise DomainError("exp_power needs 0 < alpha <= 1")
        self.alpha = float(alpha)

    @property
    def id(self):
        return f"exp_power:{_fmt(self.alpha)}"

    def _log(self, x):
        return x ** self.alpha

    def dlog(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return self.alpha * x ** (self.alpha - 1.0)

    def log_primitive(self, t, p=1.0):
        if self.alpha == 1.0:
            return _log_expm1(p * t) - math.log(p)
        if self.alpha != 0.5:
            return None
        # int_0^t e^{p sqrt x} dx = (2/p^2) (e^{pu}(pu - 1) + 1),  u = sqrt t
        pu = p * math.sqrt(t)
        inner = pu - 1.0 + math.exp(-pu) if pu > 1e-3 else pu * pu / 2 - pu ** 3 / 6 + pu ** 4 / 24
        return pu + math.log(inner) + math.log(2.0 / p ** 2)

    @property
    def rates(self):
        a = self.alpha
        if a == 1:
            return {"b": Rate(1.0, 0.0), "v": Rate(0.5, 0.0)}
        return {"b": Rate(a, a - 1.0), "v": Rate(a / 2.0, a - 1.0)}


class ExpOverLogPower(Integrand):
    """``exp(y / ln^alpha y)`` with ``y = x + e^max(1, alpha)`` (increasing on [0, inf))."""

    kind = "exp_over_logpower"
    monotone = INCREASING
    h_available = True

    def __init__(self, alpha):
        if alpha <= 0:
            raise DomainError("alpha must be > 0")
        self.alpha = float(alpha)
        self.shift = math.exp(max(1.0, self.alpha))

    @property
    def id(self):
        return f"exp_over_logpower:{_fmt(self.alpha)}"

    def _log(self, x):
        y = x + self.shift
        return y / np.log(y) ** self.alpha

    def dlog(self, x):
        L = np.log(np.asarray(x, dtype=float) + self.shift)
        return L ** -self.alpha * (1.0 - self.alpha / L)

    @property
    def rates(self):
        return {"b": Rate(1.0, 0.0, -self.alpha), "v": Rate(0.5, 0.0, -self.alpha)}


class ExpOverIterLog(Integrand):
    """``exp(y / ln_m y)`` with ``y = x + E_m`` where ``ln_m E_m = 1``."""

    kind = "exp_over_iterlog"
    monotone = INCREASING
    h_available = True

    def __init__(self, m):
        m = int(m)
        if not 1 <= m <= 3:
            raise DomainError("iterated-log order must be 1, 2 or 3")
        self.m = m
        self.shift = _tower(m)

    @property
    def id(self):
        return f"exp_over_iterlog:{self.m}"

    def _log(self, x):
        y = x + self.shift
        return y / _iterlog(y, self.m)

    def dlog(self, x):
        y = np.asarray(x, dtype=float) + self.shift
        ell = _iterlog(y, self.m)
        prod = np.ones_like(y)
        z = y
        for _ in range(self.m - 1):
            z = np.log(z)
            prod = prod * z
        return 1.0 / ell - 1.0 / (ell * ell * prod)

    @property
    def rates(self):
        return {"b": Rate(1.0, 0.0, -1.0, self.m), "v": Rate(0.5, 0.0, -1.0, self.m)}


class PolyTimesExp(Integrand):
    """``y^-alpha e^x`` with ``y = x + max(e, alpha)`` (increasing on [0, inf))."""

    kind = "poly_times_exp"
    monotone = INCREASING
    h_available = True

    def __init__(self, alpha):
        if alpha <= 0:
            raise DomainError("alpha must be > 0")
        self.alpha = float(alpha)
        self.shift = max(E, self.alpha)

    @property
    def id(self):
        return f"poly_times_exp:{_fmt(self.alpha)}"

    def _log(self, x):
        return x - self.alpha * np.log(x + self.shift)

    def dlog(self, x):
        return 1.0 - self.alpha / (np.asarray(x, dtype=float) + self.shift)

    @property
    def rates(self):
        return {"b": Rate(1.0, 0.0), "v": Rate(0.5, 0.0)}


class PureExp(ExpPower):
    kind = "pure_exp"

    def __init__(self):
        super().__init__(1.0)

    @property
    def id(self):
        return "pure_exp"


# ---------------------------------------------------------- bounded family --

class Const(Integrand):
    kind = "const"
    monotone = CONSTANT
    bounded = True
    h_available = True

    def __init__(self, c=1.0):
        if c <= 0:
            raise DomainError("constant must be > 0")
        self.c = float(c)

    @property
    def id(self):
        return f"const:{_fmt(self.c)}"

    def _eval(self, x):
        return np.full_like(x, self.c)

    def _log(self, x):
        return np.full_like(x, math.log(self.c))

    def dlog(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def log_primitive(self, t, p=1.0):
        return p * math.log(self.c) + math.log(t)

    @property
    def rates(self):
        return {"b": Rate(1.0, -1.0), "v": Rate(1.0, -1.0)}


class InvLog(Integrand):
    """``ln^-beta (x + e)``: bounded, decreasing, not integrable."""

    kind = "inv_log"
    monotone = DECREASING
    bounded = True
    h_available = True

    def __init__(self, beta=1.0):
        if beta <= 0:
            raise DomainError("beta must be > 0")
        self.beta = float(beta)

    @property
    def id(self):
        return f"inv_log:{_fmt(self.beta)}"

    def _log(self, x):
        return -self.beta * np.log(np.log(x + E))

    def dlog(self, x):
        y = np.asarray(x, dtype=float) + E
        return -self.beta / (y * np.log(y))

    def log_primitive(self, t, p=1.0):
        if p * self.beta != 1.0:
            return None
        # logarithmic integral: li(y) = Ei(ln y)
        return math.log(special.expi(math.log(t + E)) - special.expi(1.0))

    @property
    def rates(self):
        return {"b": Rate(1.0, -1.0), "v": Rate(1.0, -1.0)}


class InvTLog(Integrand):
    """``1 / (y ln^alpha y)``, ``y = x + e``: bounded, decreasing; integrable iff alpha > 1."""

    kind = "inv_tlog"
    monotone = DECREASING
    bounded = True
    h_available = True

    def __init__(self, alpha):
        if alpha <= 0:
            raise DomainError("alpha must be > 0")
        self.alpha = float(alpha)
        self.integrable = self.alpha > 1

    @property
    def id(self):
        return f"inv_tlog:{_fmt(self.alpha)}"

    def _log(self, x):
        y = x + E
        return -np.log(y) - self.alpha * np.log(np.log(y))

    def dlog(self, x):
        y = np.asarray(x, dtype=float) + E
        L = np.log(y)
        return -(1.0 + self.alpha / L) / y

    def log_primitive(self, t, p=1.0):
        if p != 1.0:
            return None
        L = math.log(t + E)
        if self.alpha == 1.0:
            return math.log(math.log(L))
        val = (L ** (1.0 - self.alpha) - 1.0) / (1.0 - self.alpha)
        return math.log(val)

    @property
    def rates(self):
        a = self.alpha
        if a > 1:
            return {}
        # b ~ (1-a)/(t ln t); the a == 1 case carries an extra 1/ln ln t, dropped here
        k = self._l2_total()
        c = 1.0 - a if a < 1 else 1.0
        return {"b": Rate(c, -1.0, -1.0), "v": Rate(k * c * c, 0.0, -2.0 * c)}

    def _l2_total(self):
        return math.exp(quad_log_lambda(self, 1e8, 2.0))


class ExpDecay(Integrand):
    """``e^{-r x}``: integrable, used as an L^phi member."""

    kind = "exp_decay"
    monotone = DECREASING
    bounded = True
    integrable = True
    h_available = True

    def __init__(self, r=1.0):
        if r <= 0:
            raise DomainError("rate must be > 0")
        self.r = float(r)

    @property
    def id(self):
        return f"exp_decay:{_fmt(self.r)}"

    def _log(self, x):
        return -self.r * x

    def dlog(self, x):
        return np.full_like(np.asarray(x, dtype=float), -self.r)

    def log_primitive(self, t, p=1.0):
        k = p * self.r
        return math.log(-math.expm1(-k * t) / k)


class Recip(Integrand):
    """``1 / (1 + x)``: bounded, decreasing, not integrable."""

    kind = "recip"
    monotone = DECREASING
    bounded = True
    h_available = True

    @property
    def id(self):
        return "recip"

    def _log(self, x):
        return -np.log1p(x)

    def dlog(self, x):
        return -1.0 / (1.0 + np.asarray(x, dtype=float))

    def log_primitive(self, t, p=1.0):
        if p == 1.0:
            return math.log(math.log1p(t))
        return math.log(((1.0 + t) ** (1.0 - p) - 1.0) / (1.0 - p))

    @property
    def rates(self):
        return {"b": Rate(1.0, -1.0, -1.0), "v": Rate(1.0, 0.0, -2.0)}


BOUNDED_FAMILY = {
    "const": Const,
    "inv_log": InvLog,
    "inv_tlog": InvTLog,
    "exp_decay": ExpDecay,
    "recip": lambda: Recip(),
}


def bounded_family(name, *params):
    try:
        return BOUNDED_FAMILY[name](*params)
    except KeyError:
        raise DomainError(f"unknown bounded family {name!r}") from None


# -------------------------------------------------- periodic building blocks --

class PeriodicBase:
    """A nonnegative function on ``[0, 1)`` extended with period 1."""

    name = "abstract"
    sup = 1.0
    singular = False
    cuts = ()

    def __call__(self, u):
        raise NotImplementedError

    def primitive(self, u, p=1.0):
        """``int_0^u g^p`` for ``0 <= u <= 1``."""
        u = float(u)
        if u <= 0:
            return 0.0
        g = (lambda x: float(self(np.asarray(x))) ** p)
        if self.singular:
            return quadrature.integrate_graded(g, 0.0, u)
        return quadrature.integrate(g, 0.0, u, points=self.cuts)[0]

    def primitive_array(self, u, p=1.0):
        return np.array([self.primitive(x, p) for x in np.ravel(u)]).reshape(np.shape(u))

    def level_measure(self, r):
        """``|{u in [0,1): g(u) >= r}|``."""
        u = (np.arange(200_000) + 0.5) / 200_000
        return float(np.mean(self(u) >= r))

    def __repr__(self):
        return f"<PeriodicBase {self.name}>"


class SpikeBase(PeriodicBase):
    """``u^-beta``: in L^2 iff beta < 1/2, in L^1 iff beta < 1."""

    singular = True

    def __init__(self, beta):
        if not 0 < beta < 1:
            raise DomainError("spike exponent must lie in (0, 1)")
        self.beta = float(beta)
        self.sup = math.inf

    @property
    def name(self):
        return f"spike:{_fmt(self.beta)}"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return u ** -self.beta

    def primitive(self, u, p=1.0):
        k = 1.0 - p * self.beta
        if k <= 0:
            return math.inf if u > 0 else 0.0
        return float(u) ** k / k

    def primitive_array(self, u, p=1.0):
        k = 1.0 - p * self.beta
        if k <= 0:
            return np.where(np.asarray(u) > 0, np.inf, 0.0)
        return np.asarray(u, dtype=float) ** k / k

    def level_measure(self, r):
        return min(1.0, r ** (-1.0 / self.beta))


class ConstBase(PeriodicBase):
    name = "const"

    def __call__(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def primitive(self, u, p=1.0):
        return float(u)

    def primitive_array(self, u, p=1.0):
        return np.asarray(u, dtype=float)

    def level_measure(self, r):
        return 1.0 if r <= 1 else 0.0


class AbsSinBase(PeriodicBase):
    """``|sin(pi u)|``, ess-sup 1."""

    name = "abs_sin"

    def __call__(self, u):
        return np.abs(np.sin(np.pi * np.asarray(u, dtype=float)))

    def primitive(self, u, p=1.0):
        u = float(u)
        if p == 1.0:
            return (1.0 - math.cos(math.pi * u)) / math.pi
        if p == 2.0:
            return u / 2.0 - math.sin(2 * math.pi * u) / (4 * math.pi)
        return super().primitive(u, p)

    def primitive_array(self, u, p=1.0):
        u = np.asarray(u, dtype=float)
        if p == 1.0:
            return (1.0 - np.cos(np.pi * u)) / np.pi
        if p == 2.0:
            return u / 2.0 - np.sin(2 * np.pi * u) / (4 * np.pi)
        return super().primitive_array(u, p)

    def level_measure(self, r):
        if r <= 0:
            return 1.0
        if r > 1:
            return 0.0
        return 1.0 - 2.0 * math.asin(r) / math.pi


class SquareBase(PeriodicBase):
    """1 on ``[0, duty)``, 0 on ``[duty, 1)``."""

    def __init__(self, duty=0.5):
        if not 0 < duty <= 1:
            raise DomainError("duty must lie in (0, 1]")
        self.duty = float(duty)
        self.cuts = (self.duty,)

    @property
    def name(self):
        return f"square:{_fmt(self.duty)}"

    def __call__(self, u):
        return (np.asarray(u, dtype=float) < self.duty).astype(float)

    def primitive(self, u, p=1.0):
        return min(float(u), self.duty)

    def primitive_array(self, u, p=1.0):
        return np.minimum(np.asarray(u, dtype=float), self.duty)

    def level_measure(self, r):
        return self.duty if 0 < r <= 1 else (1.0 if r <= 0 else 0.0)


def parse_base(spec):
    head, _, rest = spec.partition(":")
    if head == "spike":
        return SpikeBase(float(rest))
    if head == "const":
        return ConstBase()
    if head == "abs_sin":
        return AbsSinBase()
    if head == "square":
        return SquareBase(float(rest) if rest else 0.5)
    raise DomainError(f"unknown periodic base {spec!r}")


class Periodic(Integrand):
    """Period-1 extension of a base on ``[0, 1)``."""

    kind = "periodic_extension"

    def __init__(self, base, integrability_class=None):
        self.base = base
        g1 = base.primitive(1.0, 1.0)
        if not g1 > 0:
            raise DomainError("periodic base must not vanish identically")
        if not math.isfinite(g1):
            raise DomainError("periodic base must be integrable on [0, 1]")
        g2 = base.primitive(1.0, 2.0)
        self.integrability_class = "L2" if math.isfinite(g2) else "L1_only"
        if integrability_class is not None and integrability_class != self.integrability_class:
            raise DomainError(
                f"base {base.name} is {self.integrability_class}, not {integrability_class}")
        self.bounded = math.isfinite(base.sup)
        if isinstance(base, ConstBase):
            self.monotone = CONSTANT

    @property
    def id(self):
        return f"periodic:{self.base.name}"

    def _eval(self, x):
        return self.base(x - np.floor(x))

    def log_primitive(self, t, p=1.0):
        n = math.floor(t)
        val = n * self.base.primitive(1.0, p) + self.base.primitive(t - n, p)
        if not math.isfinite(val):
            return math.inf
        return math.log(val) if val > 0 else -math.inf

    def cell_integrals(self, nodes, p=1.0):
        """Exact ``int f^p`` over consecutive cells of ``nodes``."""
        nodes = np.asarray(nodes, dtype=float)
        n = np.floor(nodes)
        u = nodes - n
        # a node sitting on an integer closes the previous period
        g = self.base.primitive_array(u, p)
        full = self.base.primitive(1.0, p)
        return (n[1:] - n[:-1]) * full + g[1:] - g[:-1]

    def breakpoints(self, a, b):
        ints = np.arange(math.floor(a), math.ceil(b) + 1)
        pts = [ints + c for c in self.base.cuts] + [ints]
        return tuple(sorted(x for x in np.concatenate(pts) if a < x < b))

    def singular_points(self, a, b):
        if not self.base.singular:
            return ()
        return tuple(float(k) for k in range(math.ceil(a), math.floor(b) + 1) if a <= k < b)


def make_periodic(base, integrability_class=None):
    """Periodic extension; ``integrability_class`` ("L2" / "L1_only") is verified."""
    if isinstance(base, str):
        base = parse_base(base)
    return Periodic(base, integrability_class)


# ------------------------------------------------------- cut schedules / f* --

class CutSchedule:
    """Interlaced ``0 < s_1 < t_1 < s_2 < t_2 < ...``."""

    def intervals(self, upto):
        """``(s, t)`` arrays for all intervals with ``s_k < upto``."""
        raise NotImplementedError

    def locate(self, x):
        """Vectorised: (k, inside, offset).  ``inside`` marks ``x in (s_k, t_k]``;
        otherwise ``offset`` is measured from ``t_k`` inside the blank
        ``(t_k, s_{k+1}]`` (k = 0 means before ``s_1``)."""
        raise NotImplementedError


class ArithmeticSchedule(CutSchedule):
    """``s_k = P k``, ``t_k = P k + L`` for ``k >= 1``."""

    def __init__(self, period, length):
        if not 0 < length < period:
            raise DomainError("arithmetic cut schedule needs 0 < length < period")
        self.period = float(period)
        self.length = float(length)

    @property
    def id(self):
        return f"arith:{_fmt(self.period)}:{_fmt(self.length)}"

    def intervals(self, upto):
        k = np.arange(1, max(1, math.ceil(upto / self.period)) + 1)
        s = self.period * k
        keep = s < upto
        return s[keep], s[keep] + self.length

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(x / self.period)
        off = x - self.period * k
        at_start = off == 0
        k = np.where(at_start, k - 1, k)
        off = np.where(at_start, self.period, off)
        inside = (off <= self.length) & (k >= 1)
        blank_off = np.where(k >= 1, off - self.length, np.nan)
        return k.astype(np.int64), inside, np.where(inside, off, blank_off)

    def counts(self, t):
        """(number of complete intervals, partial length inside the current one)."""
        return self.intervals(t)


class ExplicitSchedule(CutSchedule):
    def __init__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if s.shape != t.shape or s.ndim != 1 or s.size == 0:
            raise DomainError("cut schedule needs equal-length 1-d sequences")
        if not (s[0] > 0 and np.all(s < t) and np.all(t[:-1] < s[1:])):
            raise DomainError("cut schedule must interlace strictly: 0 < s_k < t_k < s_{k+1}")
        self.s = s
        self.t = t

    @property
    def id(self):
        return "explicit"

    def intervals(self, upto):
        n = bisect_left(self.s.tolist(), upto)
        return self.s[:n], self.t[:n]

    def locate(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.s, x, side="left")  # s_k < x  <=>  index >= k
        kk = np.maximum(k - 1, 0)
        inside = (k >= 1) & (x <= self.t[kk])
        off = np.where(inside, x - self.s[kk], np.where(k >= 1, x - self.t[kk], np.nan))
        return k, inside, off


def parse_schedule(spec):
    head, _, rest = spec.partition(":")
    if head == "arith":
        p, l = rest.split(":")
        return ArithmeticSchedule(float(p), float(l))
    raise DomainError(f"unknown cut schedule {spec!r}")


class FStar(Integrand):
    """``f*(x) = sum_k f(x - s_k) 1_(s_k, t_k](x)``, optionally with the blanks
    ``(t_k, s_{k+1}]`` filled by the same construction applied to ``fill``."""

    kind = "fstar"

    def __init__(self, inner, schedule, fill=None):
        self.inner = inner
        self.schedule = schedule
        self.fill = fill
        self.bounded = True

    @property
    def id(self):
        tail = f"|{self.fill.id}" if self.fill is not None else ""
        return f"fstar:{self.inner.id}@{self.schedule.id}{tail}"

    def _eval(self, x):
        k, inside, off = self.schedule.locate(x)
        out = np.zeros_like(x)
        if np.any(inside):
            out[inside] = self.inner(off[inside])
        if self.fill is not None:
            blank = (~inside) & np.isfinite(off)
            if np.any(blank):
                out[blank] = self.fill(off[blank])
        return out

    def _pieces(self, f, starts, ends, t, p):
        total = 0.0
        if isinstance(self.schedule, ArithmeticSchedule) and starts.size:
            width = ends[0] - starts[0]
            full = ends <= t
            nfull = int(full.sum())
            if nfull:
                total += nfull * f.lambda_p(width, p)
            for s in starts[~full]:
                total += f.lambda_p(min(t, s + width) - s, p) if t > s else 0.0
            return total
        for s, e in zip(starts, ends):
            if t > s:
                total += f.lambda_p(min(t, e) - s, p)
        return total

    def log_primitive(self, t, p=1.0):
        s, e = self.schedule.intervals(t)
        total = self._pieces(self.inner, s, e, t, p)
        if self.fill is not None and s.size:
            total += self._fill_total(t, p)
        return math.log(total) if total > 0 else -math.inf

    def _fill_total(self, t, p):
        s_all, t_all = self.schedule.intervals(t)
        if isinstance(self.schedule, ArithmeticSchedule):
            starts = t_all
            ends = t_all + (self.schedule.period - self.schedule.length)
        else:
            starts = t_all
            nxt = self.schedule.s[1:len(t_all) + 1]
            ends = np.append(nxt, np.inf)[:len(t_all)]
        total = 0.0
        for a, b in zip(starts, ends):
            if t > a:
                total += self.fill.lambda_p(min(t, b) - a, p)
        return total

    def breakpoints(self, a, b):
        s, e = self.schedule.intervals(b)
        pts = np.concatenate([s, e])
        return tuple(sorted(x for x in pts if a < x < b))


def make_fstar(f, sched, fill=None):
    if not isinstance(sched, CutSchedule):
        s, t = sched
        sched = ExplicitSchedule(s, t)
    return FStar(f, sched, fill)


# ------------------------------------------------------- step / from_b ----

class StepSequence(Integrand):
    """``sum_k a_k 1_(s_k, t_k](x)``."""

    kind = "step_sequence"

    def __init__(self, a, s, t):
        self.schedule = ExplicitSchedule(s, t)
        self.a = np.asarray(a, dtype=float)
        if self.a.shape != self.schedule.s.shape or np.any(self.a < 0):
            raise DomainError("step heights must be >= 0, one per interval")
        self.bounded = True

    @property
    def id(self):
        return f"step_sequence:n={self.a.size}"

    def _eval(self, x):
        k, inside, _ = self.schedule.locate(x)
        out = np.zeros_like(x)
        out[inside] = self.a[k[inside] - 1]
        return out

    def log_primitive(self, t, p=1.0):
        s, e = self.schedule.s, self.schedule.t
        lengths = np.clip(np.minimum(e, t) - s, 0.0, None)
        val = float(np.sum(self.a ** p * lengths))
        return math.log(val) if val > 0 else -math.inf

    def breakpoints(self, a, b):
        pts = np.concatenate([self.schedule.s, self.schedule.t])
        return tuple(sorted(x for x in pts if a < x < b))


class BSpec:
    """A decreasing, nonintegrable rate ``b`` with primitive ``B``."""

    name = "abstract"
    integrable = False
    f_monotone = NONE

    def b(self, x):
        raise NotImplementedError

    def B(self, x):
        raise NotImplementedError

    def db(self, x):
        raise NotImplementedError

    def log_lambda_p(self, t, p):
        return None


class BConst(BSpec):
    f_monotone = INCREASING

    def __init__(self, c):
        if c <= 0:
            raise DomainError("b must be positive")
        self.c = float(c)

    @property
    def name(self):
        return f"const:{_fmt(self.c)}"

    def b(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    def B(self, x):
        return self.c * np.asarray(x, dtype=float)

    def db(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def log_lambda_p(self, t, p):
        c = self.c
        return p * math.log(c) + _log_expm1(p * c * t) - math.log(p * c)


class BRecip(BSpec):
    """``b = 1/(1+x)``, ``B = ln(1+x)``, so ``f = 1``."""

    name = "recip"
    f_monotone = CONSTANT

    def b(self, x):
        return 1.0 / (1.0 + np.asarray(x, dtype=float))

    def B(self, x):
        return np.log1p(np.asarray(x, dtype=float))

    def db(self, x):
        return -1.0 / (1.0 + np.asarray(x, dtype=float)) ** 2

    def log_lambda_p(self, t, p):
        return math.log(t)


class BInvSqrt(BSpec):
    """``b = 1/(2 sqrt(1+x))``, ``B = sqrt(1+x) - 1``."""

    name = "inv_sqrt"
    f_monotone = INCREASING

    def b(self, x):
        return 0.5 / np.sqrt(1.0 + np.asarray(x, dtype=float))

    def B(self, x):
        return np.sqrt(1.0 + np.asarray(x, dtype=float)) - 1.0

    def db(self, x):
        return -0.25 * (1.0 + np.asarray(x, dtype=float)) ** -1.5


class BStep(BSpec):
    """Piecewise-constant ``b`` (zero in the blanks); ``f`` is not monotone."""

    name = "step"

    def __init__(self, heights, s, t):
        self.steps = StepSequence(heights, s, t)
        sched = self.steps.schedule
        self._s, self._t, self._h = sched.s, sched.t, self.steps.a
        inc = self._h * (self._t - self._s)
        self._B_end = np.cumsum(inc)
        self._B_start = self._B_end - inc

    def b(self, x):
        return self.steps(x)

    def B(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self._s, x, side="left")  # intervals with s < x
        kk = np.maximum(k - 1, 0)
        prev = np.where(k >= 1, self._B_start[kk], 0.0)
        inside = np.where(k >= 1, np.clip(x - self._s[kk], 0.0, self._t[kk] - self._s[kk]), 0.0)
        return prev + np.where(k >= 1, self._h[kk], 0.0) * inside

    def log_lambda_p(self, t, p):
        # on (s, e]: int (h e^{B_s + h (x - s)})^p dx = h^{p-1}/p e^{p B_s}(e^{p h w} - 1)
        s, e, h = self._s, self._t, self._h
        w = np.clip(np.minimum(e, t) - s, 0.0, None)
        pos = (w > 0) & (h > 0)
        terms = (h[pos] ** (p - 1.0) / p) * np.exp(p * self._B_start[pos]) * np.expm1(p * h[pos] * w[pos])
        val = float(np.sum(terms))
        return math.log(val) if val > 0 else -math.inf


def parse_bspec(spec):
    head, _, rest = spec.partition(":")
    if head == "const":
        return BConst(float(rest))
    if head == "recip":
        return BRecip()
    if head == "inv_sqrt":
        return BInvSqrt()
    raise DomainError(f"unknown b specification {spec!r}")


class FromB(Integrand):
    """``f = b e^B`` with ``B = int_0^x b``; then ``lambda_t f = e^{B_t} - 1``."""

    kind = "from_b"

    def __init__(self, bspec, ident=None):
        if bspec.integrable:
            raise DomainError("b must be nonintegrable (otherwise lambda_t f stays bounded)")
        self.bspec = bspec
        self.monotone = bspec.f_monotone
        self.h_available = not isinstance(bspec, BStep)
        self._id = ident

    @property
    def id(self):
        return self._id or f"from_b:{self.bspec.name}"

    def _log(self, x):
        return np.log(self.bspec.b(x)) + self.bspec.B(x)

    def dlog(self, x):
        b = self.bspec.b(x)
        return self.bspec.db(x) / b + b

    def log_primitive(self, t, p=1.0):
        if p == 1.0:
            return _log_expm1(float(self.bspec.B(t)))
        return self.bspec.log_lambda_p(t, p)

    def breakpoints(self, a, b):
        if isinstance(self.bspec, BStep):
            return self.bspec.steps.breakpoints(a, b)
        return ()

    @property
    def rates(self):
        bs = self.bspec
        if isinstance(bs, BConst):
            return {"b": Rate(bs.c, 0.0), "v": Rate(bs.c / 2.0, 0.0)}
        if isinstance(bs, BRecip):
            return {"b": Rate(1.0, -1.0), "v": Rate(1.0, -1.0)}
        if isinstance(bs, BInvSqrt):
            return {"b": Rate(0.5, -0.5), "v": Rate(0.25, -0.5)}
        return {}


def make_from_b(b):
    if isinstance(b, str):
        b = parse_bspec(b)
    return FromB(b)


def make_counterexample_B_not_V(n_intervals=1024):
    """Step-rate construction of an integrand in class V but not in class B.

    Intervals ``(s_j, t_j]`` separated by unit blanks carry ``b = a_j / 2`` with
    ``a_j = 1`` on ``K = {2^k}`` and ``a_j = 1/j^2`` elsewhere; lengths are set so
    that every interval adds ``c_j = 1`` to ``e^G`` (``G = 2B``), i.e.
    ``G(t_j) = ln(1 + j)``.  The returned integrand exposes ``nodes`` (the
    right endpoints ``t_j``) and ``K``.
    """
    j = np.arange(1, n_intervals + 1)
    in_k = (j & (j - 1)) == 0
    a = np.where(in_k, 1.0, 1.0 / j.astype(float) ** 2)
    m = np.log1p(1.0 / j) / a
    s = np.empty(n_intervals)
    t = np.empty(n_intervals)
    pos = 1.0
    for i in range(n_intervals):
        s[i] = pos
        t[i] = pos + m[i]
        pos = t[i] + 1.0
    f = FromB(BStep(a / 2.0, s, t), ident=f"counterexample_bv:{n_intervals}")
    f.nodes = t
    f.K = j[in_k]
    f.coefficients = a
    return f


# -------------------------------------------------------- quasi-periodic ---

class QuasiPeriodic(Integrand):
    """Amplitude times a period-1 factor with ess-sup 1."""

    kind = "quasiperiodic"

    AMPLITUDE_CLASSES = ("V", "B")

    def __init__(self, amplitude, factor, r=0.5, amplitude_class="V"):
        if amplitude_class not in self.AMPLITUDE_CLASSES:
            raise DomainError(f"amplitude_class must be one of {self.AMPLITUDE_CLASSES}")
        if not amplitude.is_increasing:
            raise DomainError("quasi-periodic amplitude must be increasing")
        if not math.isclose(factor.sup, 1.0, rel_tol=0, abs_tol=1e-12):
            raise DomainError("periodic factor must have ess-sup 1 (rescale first)")
        if not 0 < r <= 1:
            raise DomainError("level r must lie in (0, 1]")
        self.amplitude = amplitude
        self.amplitude_class = amplitude_class
        self.factor = factor
        self.r = float(r)
        self.rho = factor.level_measure(self.r)
        if self.rho <= 0:
            raise DomainError("level set {g >= r} is null; lower r")
        self.d = max(1, math.ceil((1.0 - self.rho) / self.rho - 1e-12))

    @property
    def id(self):
        return f"quasiperiodic:{self.amplitude.id}*{self.factor.name}"

    @property
    def partition(self):
        return {"r": self.r, "rho": self.rho, "d": self.d}

    @property
    def base_constant(self):
        """``((d + 1) / r)^2``: the limit of the comparison constant."""
        return ((self.d + 1) / self.r) ** 2

    def amplitude_in_class(self, t_schedule):
        """Numerical check that the amplitude lies in the class the bound is stated for."""
        from .diagnostics import class_membership  # circular at import time

        return class_membership(self.amplitude, t_schedule)[self.amplitude_class]

    def comparison_constant(self, t):
        """Finite-t constant ``C_t`` with ``v_t(fg) <= C_t v_t(f)`` for ``t >= 2``."""
        n = math.floor(t)
        ratio = math.exp(self.amplitude.log_lambda(t) - self.amplitude.log_lambda(n - 1))
        return self.base_constant * ratio ** 2

    def _eval(self, x):
        return self.amplitude(x) * self.factor(x - np.floor(x))

    def _nodes(self, t):
        n = math.floor(t)
        ks = np.arange(n)
        pts = [ks, ks + 1.0] + [ks + c for c in self.factor.cuts]
        nodes = np.unique(np.concatenate(pts + [np.array([0.0, t])]))
        return nodes[nodes <= t]

    def log_primitive(self, t, p=1.0):
        nodes = self._nodes(t)
        vals = quadrature.gauss_legendre_cells(lambda x: self._eval(x) ** p, nodes, order=24)
        total = float(vals.sum())
        return math.log(total) if total > 0 else -math.inf

    def breakpoints(self, a, b):
        return tuple(x for x in self._nodes(b) if a < x < b)


def make_quasiperiodic(amplitude, g, r=0.5, amplitude_class="V"):
    if isinstance(amplitude, str):
        amplitude = parse(amplitude)
    if isinstance(g, str):
        g = parse_base(g)
    return QuasiPeriodic(amplitude, g, r, amplitude_class)


# ------------------------------------------------------------ combinators --

class Scaled(Integrand):
    kind = "scaled"

    def __init__(self, c, inner):
        if c <= 0:
            raise DomainError("scale must be > 0")
        self.c = float(c)
        self.inner = inner
        self.monotone = inner.monotone
        self.bounded = inner.bounded
        self.integrable = inner.integrable
        self.h_available = inner.h_available

    @property
    def id(self):
        return f"scaled({_fmt(self.c)},{self.inner.id})"

    def _eval(self, x):
        return self.c * self.inner._eval(x)

    def _log(self, x):
        return math.log(self.c) + self.inner._log(x)

    def dlog(self, x):
        return self.inner.dlog(x)

    def log_lambda(self, t, p=1.0, tol=quadrature.DEFAULT_TOL):
        return p * math.log(self.c) + self.inner.log_lambda(t, p, tol)

    def log_primitive(self, t, p=1.0):
        lp = self.inner.log_primitive(t, p)
        return None if lp is None else p * math.log(self.c) + lp

    def breakpoints(self, a, b):
        return self.inner.breakpoints(a, b)

    @property
    def rates(self):
        return self.inner.rates


class Sum(Integrand):
    kind = "sum"

    def __init__(self, items):
        items = list(items)
        if len(items) < 2:
            raise DomainError("sum needs at least two integrands")
        self.items = items
        if all(f.is_increasing for f in items):
            self.monotone = CONSTANT if all(f.monotone == CONSTANT for f in items) else INCREASING
        elif all(f.is_decreasing for f in items):
            self.monotone = DECREASING
        self.bounded = all(f.bounded for f in items)
        self.integrable = all(f.integrable for f in items)
        self.h_available = all(f.h_available for f in items)

    @property
    def id(self):
        return "sum(" + ",".join(f.id for f in self.items) + ")"

    def _log(self, x):
        logs = np.stack([np.broadcast_to(f._log(x), np.shape(x)) for f in self.items])
        return np.logaddexp.reduce(logs, axis=0)

    def dlog(self, x):
        logs = np.stack([f.log(x) for f in self.items])
        w = np.exp(logs - logs.max(axis=0))
        hs = np.stack([f.dlog(x) for f in self.items])
        return (w * hs).sum(axis=0) / w.sum(axis=0)

    def log_primitive(self, t, p=1.0):
        if p != 1.0:
            return None
        return float(np.logaddexp.reduce([f.log_lambda(t) for f in self.items]))

    def breakpoints(self, a, b):
        pts = set()
        for f in self.items:
            pts.update(f.breakpoints(a, b))
        return tuple(sorted(pts))


# ----------------------------------------------------------------- parser --

_SIMPLE = {
    "power": lambda a: Power(float(a)),
    "exp_log_power": lambda a: ExpLogPower(float(a)),
    "exp_power": lambda a: ExpPower(float(a)),
    "exp_over_logpower": lambda a: ExpOverLogPower(float(a)),
    "exp_over_iterlog": lambda m: ExpOverIterLog(int(m)),
    "poly_times_exp": lambda a: PolyTimesExp(float(a)),
    "const": lambda c="1": Const(float(c)),
    "inv_log": lambda b="1": InvLog(float(b)),
    "inv_tlog": lambda a: InvTLog(float(a)),
    "exp_decay": lambda r="1": ExpDecay(float(r)),
}


def _split_top(s, maxsplit=-1):
    parts, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0 and (maxsplit < 0 or len(parts) < maxsplit):
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def parse(ident):
    """Build an integrand from its string identifier (DomainError if unknown)."""
    s = ident.strip()
    try:
        if s.startswith("sum(") and s.endswith(")"):
            return Sum(parse(x) for x in _split_top(s[4:-1]))
        if s.startswith("scaled(") and s.endswith(")"):
            c, inner = _split_top(s[7:-1], 1)
            return Scaled(float(c), parse(inner))
        head, _, rest = s.partition(":")
        if head == "pure_exp" and not rest:
            return PureExp()
        if head == "recip" and not rest:
            return Recip()
        if head == "fstar":
            body, _, fill = rest.partition("|")
            inner, _, sched = body.rpartition("@")
            return FStar(parse(inner), parse_schedule(sched), parse(fill) if fill else None)
        if head == "periodic":
            return make_periodic(parse_base(rest))
        if head == "quasiperiodic":
            amp, _, fac = rest.rpartition("*")
            return make_quasiperiodic(parse(amp), parse_base(fac))
        if head == "from_b":
            return make_from_b(parse_bspec(rest))
        if head == "counterexample_bv":
            return make_counterexample_B_not_V(int(rest) if rest else 1024)
        if head in _SIMPLE:
            args = rest.split(":") if rest else []
            return _SIMPLE[head](*args)
    except DomainError:
        raise
    except (TypeError, ValueError) as exc:
        raise DomainError(f"malformed integrand id {ident!r}: {exc}") from None
    raise DomainError(f"unknown integrand id {ident!r}")


def catalog():
    """Identifier templates with one-line descriptions (the ``list-catalog`` view)."""
    return {
        "power:A": "x^A",
        "exp_log_power:A": "exp(ln^A(x+e))",
        "exp_power:A": "exp(x^A), 0<A<=1",
        "exp_over_logpower:A": "exp(y/ln^A y), y=x+e^max(1,A)",
        "exp_over_iterlog:M": "exp(y/ln_M y), y=x+E_M with ln_M E_M=1",
        "poly_times_exp:A": "y^-A e^x, y=x+max(e,A)",
        "pure_exp": "e^x",
        "const:C": "C",
        "inv_log:B": "ln^-B(x+e)",
        "inv_tlog:A": "1/((x+e) ln^A(x+e))",
        "exp_decay:R": "e^{-R x} (integrable)",
        "recip": "1/(1+x)",
        "periodic:BASE": "period-1 extension; BASE in spike:beta | const | abs_sin | square:duty",
        "fstar:ID@arith:P:L[|FILL]": "cuts/shifts/blanks of ID on (Pk, Pk+L], blanks optionally filled",
        "quasiperiodic:ID*BASE": "increasing amplitude ID times period-1 factor BASE (sup 1)",
        "from_b:BSPEC": "b e^B; BSPEC in const:c | recip | inv_sqrt",
        "counterexample_bv[:N]": "step-rate integrand in V but not in B",
        "scaled(C,ID)": "C * ID",
        "sum(ID,ID,...)": "pointwise sum",
    }


# The A.5 table rows with the parameter used to reproduce each row.
TABLE_ROWS = (
    ("t^alpha", "power:2"),
    ("e^{ln^alpha t}, alpha<=1", "exp_log_power:0.5"),
    ("e^{ln^alpha t}, alpha>=1", "exp_log_power:2"),
    ("e^{t^alpha}, alpha<1", "exp_power:0.5"),
    ("e^{t ln^-alpha t}", "exp_over_logpower:2"),
    ("e^{t/ln_m t}", "exp_over_iterlog:2"),
    ("t^-alpha e^t", "poly_times_exp:1"),
    ("e^t", "pure_exp"),
)
