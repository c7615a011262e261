"""Gamma process increments and pathwise integrals ``int_0^t f dGamma``.

Each grid cell carries an identity ``(cell_id, depth)``.  Depth-0 cells are
lattice cells ``(k h, (k+1) h]`` (or, on a free-form grid, simply the k-th
cell); splitting cell ``(i, d)`` produces ``(2i, d+1)`` and ``(2i+1, d+1)``.
All randomness is a pure function of ``(seed, stream, cell_id, depth,
purpose)`` through a counter-based generator, so extending a path or refining
it never changes cells that already exist.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from . import quadrature
from .errors import DomainError, UsageError

DEFAULT_MAX_STEP = 0.01
DEFAULT_CELLS = 10_000
_MAX_ID = 2 ** 32


def default_step(horizon):
    """``min(0.01, t / 1e4)``."""
    return min(DEFAULT_MAX_STEP, float(horizon) / DEFAULT_CELLS)


def _readonly(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray
    cell_ids: np.ndarray | None = None
    depths: np.ndarray | None = None
    lattice_h: float | None = None

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("a grid needs at least two nodes")
        if nodes[0] != 0.0 or not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise DomainError("grid nodes must start at 0, be finite and strictly increase")
        n = nodes.size - 1
        ids = np.arange(n) if self.cell_ids is None else self.cell_ids
        depths = np.zeros(n) if self.depths is None else self.depths
        if len(ids) != n or len(depths) != n:
            raise DomainError("cell identity arrays must match the number of cells")
        object.__setattr__(self, "nodes", _readonly(nodes, float))
        object.__setattr__(self, "cell_ids", _readonly(ids, np.int64))
        object.__setattr__(self, "depths", _readonly(depths, np.int64))

    @classmethod
    def uniform(cls, horizon, h=None):
        """Lattice grid ``k h`` up to ``horizon``; a final partial cell is a split child."""
        horizon = float(horizon)
        if not horizon > 0:
            raise DomainError("horizon must be > 0")
        h = default_step(horizon) if h is None else float(h)
        if not h > 0:
            raise DomainError("step must be > 0")
        nodes, ids, depths = _lattice_segment(0.0, 0, horizon, h)
        return cls(np.concatenate([[0.0], nodes]), ids, depths, h)

    @classmethod
    def graded(cls, horizon, h, singular_points=(), levels=30):
        """Uniform step ``h`` plus dyadic cells ``[x, x + h 2^-j]`` after each singular point."""
        base = np.arange(0.0, horizon, h)
        extra = [np.asarray(x, float) + h * 2.0 ** -np.arange(1, levels + 1) for x in singular_points]
        nodes = np.unique(np.concatenate([base, [horizon]] + extra))
        return cls(nodes[(nodes >= 0) & (nodes <= horizon)])

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def horizon(self):
        return float(self.nodes[-1])

    @property
    def n_cells(self):
        return self.nodes.size - 1

    @property
    def midpoints(self):
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])


def _lattice_segment(start, k0, stop, h):
    """Nodes/ids for lattice cells from ``start`` (= k0 h) up to ``stop`` (partial last cell)."""
    n_full = int(math.floor(stop / h * (1 + 1e-12))) - k0
    n_full = max(n_full, 0)
    ks = np.arange(k0, k0 + n_full)
    nodes = (ks + 1) * h
    if n_full and nodes[-1] > stop:
        nodes[-1] = stop
    ids = ks.astype(np.int64)
    depths = np.zeros(n_full, dtype=np.int64)
    last = nodes[-1] if n_full else start
    if stop - last > 1e-12 * max(1.0, stop):
        k = k0 + n_full
        nodes = np.append(nodes, stop)
        ids = np.append(ids, 2 * k)
        depths = np.append(depths, 1)
    return nodes, ids, depths


@dataclass(frozen=True)
class SeedRecord:
    seed: int
    stream: int = 0

    @property
    def key(self):
        return K.split_key(self.seed)


@dataclass(frozen=True)
class _Pending:
    """Unmaterialised remainder of a lattice cell cut by the horizon."""

    cell_id: int
    depth: int
    left: float
    right: float
    delta: float


@dataclass(frozen=True, eq=False)
class GammaIncrements:
    grid: Grid
    deltas: np.ndarray
    seed_record: SeedRecord
    pending: _Pending | None = field(default=None, repr=False)
    next_lattice: int | None = field(default=None, repr=False)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.shape != (self.grid.n_cells,):
            raise DomainError("one increment per cell is required")
        if np.any(d < 0):
            raise DomainError("increments must be nonnegative")
        object.__setattr__(self, "deltas", _readonly(d, float))

    @property
    def horizon(self):
        return self.grid.horizon

    @property
    def total(self):
        return float(self.deltas.sum())

    def mass(self, a, b):
        """Gamma mass of the cells contained in ``(a, b]``."""
        x = self.grid.nodes
        sel = (x[:-1] >= a) & (x[1:] <= b)
        return float(self.deltas[sel].sum())


# ------------------------------------------------------------ variates -----

class CounterRNG:
    """Stateful cursor over a keyed counter stream (for scalar draws)."""

    def __init__(self, seed, stream=0, purpose=K.PURPOSE_SCALAR):
        self.seed = int(seed)
        self.stream = int(stream)
        self.purpose = int(purpose)
        self.k0, self.k1 = K.split_key(self.seed)
        self.position = 0

    def gamma(self, shape, size=None):
        shape = float(shape)
        if not shape > 0:
            raise DomainError("Gamma shape must be > 0")
        n = 1 if size is None else int(size)
        cells = np.arange(self.position, self.position + n, dtype=np.int64)
        self.position += n
        out = K.gamma_cells(np.full(n, shape), cells, np.zeros(n, np.int64),
                            self.stream, self.purpose, self.k0, self.k1)
        return float(out[0]) if size is None else out


def sample_gamma_variate(shape, rng_state):
    """One Gamma(shape, 1) draw from a :class:`CounterRNG`."""
    return rng_state.gamma(shape)


def split_increment(delta, shape_left, shape_right, rng_state):
    """Gamma bridge: ``(B delta, (1 - B) delta)`` with ``B ~ Beta(shape_left, shape_right)``."""
    if not (shape_left > 0 and shape_right > 0):
        raise DomainError("split shapes must be > 0")
    if delta < 0:
        raise DomainError("delta must be >= 0")
    left = rng_state.gamma(shape_left)
    right = rng_state.gamma(shape_right)
    part = delta * (left / (left + right))
    return part, delta - part


def _keyed_split(parents, ids, depths, a, b, seed_record):
    """Vectorised split of parent masses keyed by the parents' identities."""
    k0, k1 = seed_record.key
    s = seed_record.stream
    left = K.gamma_cells(np.asarray(a, float), ids, depths, s, K.PURPOSE_SPLIT_LEFT, k0, k1)
    right = K.gamma_cells(np.asarray(b, float), ids, depths, s, K.PURPOSE_SPLIT_RIGHT, k0, k1)
    part = parents * (left / (left + right))
    return part, parents - part


def _base_draws(widths, ids, seed_record):
    k0, k1 = seed_record.key
    return K.gamma_cells(np.asarray(widths, float), np.asarray(ids, np.int64),
                         np.zeros(len(ids), np.int64), seed_record.stream,
                         K.PURPOSE_BASE, k0, k1)


# ------------------------------------------------------------- paths -------

def _check_ids(ids):
    if ids.size and ids.max() >= _MAX_ID:
        raise UsageError("cell identities exceed the 32-bit counter space; use a coarser base grid")


def sample_increments(grid, seed, stream=0):
    """Independent Gamma(width) increments for every cell of ``grid``."""
    rec = SeedRecord(int(seed), int(stream))
    if grid.lattice_h is not None:
        return _extend_lattice(rec, grid.lattice_h, 0.0, 0, None, grid.horizon)
    if np.any(grid.depths != 0):
        raise UsageError("free-form grids with split cells must be produced by refine()")
    _check_ids(grid.cell_ids)
    return GammaIncrements(grid, _base_draws(grid.widths, grid.cell_ids, rec), rec)


def _extend_lattice(rec, h, start, k_next, pending, stop, prefix=None):
    nodes, ids, depths, deltas = [], [], [], []
    pos = start
    if pending is not None:
        # finish (or cut again) the partially used lattice cell
        cell_end = pos + pending.right
        if stop >= cell_end * (1 - 1e-15):
            nodes.append(cell_end)
            ids.append(pending.cell_id)
            depths.append(pending.depth)
            deltas.append(pending.delta)
            pos = cell_end
            pending = None
        else:
            a = stop - pos
            l, r = _keyed_split(np.array([pending.delta]), np.array([pending.cell_id]),
                                np.array([pending.depth]), [a], [pending.right - a], rec)
            nodes.append(stop)
            ids.append(2 * pending.cell_id)
            depths.append(pending.depth + 1)
            deltas.append(float(l[0]))
            pending = _Pending(2 * pending.cell_id + 1, pending.depth + 1, a,
                               pending.right - a, float(r[0]))
            pos = stop
    new_pending = pending
    if pos < stop and pending is None:
        seg_nodes, seg_ids, seg_depths = _lattice_segment(pos, k_next, stop, h)
        full = seg_depths == 0
        seg_deltas = np.empty(seg_ids.size)
        _check_ids(seg_ids[full])
        seg_deltas[full] = _base_draws(np.full(int(full.sum()), h), seg_ids[full], rec)
        k_next += int(full.sum())
        if not full.all():
            k = k_next
            parent = _base_draws([h], [k], rec)
            a = stop - (k * h)
            a = min(max(a, 0.0), h)
            l, r = _keyed_split(parent, np.array([k]), np.array([0]), [a], [h - a], rec)
            seg_deltas[-1] = l[0]
            new_pending = _Pending(2 * k + 1, 1, a, h - a, float(r[0]))
            k_next += 1
        nodes.extend(seg_nodes.tolist())
        ids.extend(seg_ids.tolist())
        depths.extend(seg_depths.tolist())
        deltas.extend(seg_deltas.tolist())
    if prefix is None:
        grid = Grid(np.concatenate([[0.0], nodes]), np.array(ids, np.int64),
                    np.array(depths, np.int64), h)
        return GammaIncrements(grid, np.array(deltas), rec, new_pending, k_next)
    g = prefix.grid
    grid = Grid(np.concatenate([g.nodes, nodes]),
                np.concatenate([g.cell_ids, np.array(ids, np.int64)]),
                np.concatenate([g.depths, np.array(depths, np.int64)]), g.lattice_h)
    return GammaIncrements(grid, np.concatenate([prefix.deltas, deltas]), rec, new_pending, k_next)


def extend_path(path, new_horizon, seed=None):
    """Append cells up to ``new_horizon``; existing cells are untouched.

    ``seed`` (optional) must match the path's own seed material.
    """
    new_horizon = float(new_horizon)
    if not new_horizon > path.horizon:
        raise DomainError("new horizon must exceed the current horizon")
    if seed is not None and int(seed) != path.seed_record.seed:
        raise UsageError("extension must use the seed material of the path")
    h = path.grid.lattice_h
    if h is None:
        raise UsageError("only lattice paths (Grid.uniform) can be extended")
    k_next = path.next_lattice
    if k_next is None:
        k_next = int(round(path.horizon / h))
    return _extend_lattice(path.seed_record, h, path.horizon, k_next, path.pending,
                           new_horizon, prefix=path)


def refine(path, levels=1):
    """Halve every cell ``levels`` times through keyed Gamma bridges."""
    grid, deltas = path.grid, path.deltas
    for _ in range(int(levels)):
        ids, depths = grid.cell_ids, grid.depths
        _check_ids(2 * ids + 1)
        w = grid.widths
        left, right = _keyed_split(deltas, ids, depths, w / 2, w / 2, path.seed_record)
        mids = grid.midpoints
        nodes = np.empty(2 * grid.n_cells + 1)
        nodes[0::2] = grid.nodes
        nodes[1::2] = mids
        new_ids = np.empty(2 * ids.size, np.int64)
        new_ids[0::2], new_ids[1::2] = 2 * ids, 2 * ids + 1
        new_depths = np.repeat(depths + 1, 2)
        d = np.empty(2 * ids.size)
        d[0::2], d[1::2] = left, right
        grid = Grid(nodes, new_ids, new_depths, grid.lattice_h)
        deltas = d
    return replace(path, grid=grid, deltas=deltas)


# --------------------------------------------------------- integrals -------

@dataclass(frozen=True)
class IntegralBracket:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError("bracket lower end exceeds upper end")

    @property
    def width(self):
        return self.upper - self.lower

    def __contains__(self, x):
        return self.lower <= x <= self.upper


def _require_monotone(f, override):
    if f.monotone == "none" and not override:
        raise UsageError(f"{f.id} is not monotone; the endpoint bracket is not valid")


def integral_bracket(f, path, override=False):
    _require_monotone(f, override)
    fx = f(path.grid.nodes)
    a, b = fx[:-1], fx[1:]
    d = path.deltas
    return IntegralBracket(float(np.dot(np.minimum(a, b), d)), float(np.dot(np.maximum(a, b), d)))


def cell_values(f, grid, rule="midpoint"):
    """Per-cell weights: ``f`` at midpoints or exact cell means."""
    if rule == "midpoint":
        return f(grid.midpoints)
    if rule == "average":
        return cell_integrals(f, grid.nodes) / grid.widths
    raise DomainError(f"unknown cell rule {rule!r}")


def cell_integrals(f, nodes, p=1.0):
    """``int f^p`` over each cell; exact for periodic bases with closed forms."""
    nodes = np.asarray(nodes, dtype=float)
    exact = getattr(f, "cell_integrals", None)
    if exact is not None:
        return exact(nodes, p)
    return quadrature.gauss_legendre_cells(lambda x: f(x) ** p, nodes, order=8)


def integral_estimate(f, path, rule="midpoint"):
    """``sum_k f(mid_k) delta_k`` (or cell means with ``rule="average"``)."""
    return float(np.dot(cell_values(f, path.grid, rule), path.deltas))


# ------------------------------------------------------------ L^phi --------

@dataclass(frozen=True)
class LphiResult:
    verdict: str  # "member" | "non-member" | "undecided"
    integral: float
    horizon: float
    method: str

    def __eq__(self, other):
        if isinstance(other, str):
            return self.verdict == other
        return NotImplemented

    __hash__ = object.__hash__


def lphi_membership(f, horizon=1e6, tolerance=1e-8):
    """Decide whether ``int_0^inf ln(1 + f) < inf``."""
    horizon = float(horizon)

    def logphi(x):
        lf = f.log(x)
        return np.log(np.logaddexp(0.0, lf))  # ln ln(1 + f)

    def partial(T):
        return math.exp(quadrature.log_integrate(logphi, 0.0, T, monotone=f.monotone,
                                                 points=f.breakpoints(0.0, T), epsrel=1e-10))

    if f.monotone in ("increasing", "constant"):
        # ln(1 + f) >= ln(1 + f(1)) > 0 on [1, inf)
        witness = float(np.log1p(f(np.asarray(1.0))))
        if witness > 0:
            return LphiResult("non-member", math.inf, horizon, "increasing lower bound")
    if f.monotone == "decreasing" and not math.isinf(horizon):
        if f.integrable:
            # ln(1 + f) <= f, so the metadata alone decides; the value is a quadrature estimate
            return LphiResult("member", partial(horizon), horizon, "ln(1+f) <= f, f integrable")
        elif f.bounded:
            # ln(1 + f) >= f / (1 + f(0)) and int f = inf
            return LphiResult("non-member", math.inf, horizon, "bounded nonintegrable comparison")
    if getattr(f, "kind", "") == "periodic_extension":
        return LphiResult("non-member", math.inf, horizon, "positive mass per period")
    # generic: geometric probes and increment ratios
    probes = horizon * np.geomspace(1e-3, 1.0, 7)
    vals = np.array([partial(T) for T in probes])
    inc = np.diff(vals)
    if inc[-1] <= tolerance * vals[-1] and np.all(inc[1:] <= 0.5 * inc[:-1] + 1e-300):
        return LphiResult("member", float(vals[-1]), horizon, "geometric tail decay")
    if np.all(inc[1:] >= 0.9 * inc[:-1]):
        return LphiResult("non-member", math.inf, horizon, "non-decaying increments")
    return LphiResult("undecided", float(vals[-1]), horizon, "no witness at probe horizon")
