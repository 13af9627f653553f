"""Finite shift-model probability spaces and cylinder functions.

A system is a product of ``d`` independent one-sided shifts.  Direction ``k``
(1-based throughout the public API) carries either an i.i.d. (Bernoulli) or a
stationary Markov process on a finite alphabet.  A cylinder function depends
on the first ``w_k`` coordinates of direction ``k``; its value table is a
numpy array whose axes are ordered direction-major, coordinate 0 first, so
the C-order flattening is the mixed-radix layout used on disk.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (NegativeProbability, NonStochasticMatrix,
                     NoStationaryDistribution, SystemMismatch, WindowError,
                     ZeroMeasureState)
from .linalg import solve_exact

EXACT = "exact"
FLOAT = "float"
DEFAULT_TOL = 1e-9
FACTOR_TOL = 1e-12

BERNOULLI = "bernoulli"
MARKOV = "markov"


def parse_scalar(value):
    """Parse ints, Fractions, ``"p/q"`` and decimal strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot parse scalar {value!r}")


def format_scalar(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return repr(float(value))


def _coerce(value, arithmetic):
    if arithmetic == EXACT:
        return parse_scalar(value)
    return float(parse_scalar(value)) if isinstance(value, str) else float(value)


# ---------------------------------------------------------------- factors

@dataclass(frozen=True)
class Factor:
    """One direction of the product system.

    ``probs`` is set for Bernoulli factors; ``Q`` and ``pi`` for Markov ones.
    Scalars are Fractions in exact mode and floats in float mode.
    """
    kind: str
    alphabet_size: int
    probs: tuple = None
    Q: tuple = None
    pi: tuple = None
    arithmetic: str = EXACT

    @property
    def marginal(self):
        return self.probs if self.kind == BERNOULLI else self.pi

    @property
    def transition(self):
        """Forward one-step transition matrix as nested tuples."""
        if self.kind == BERNOULLI:
            return tuple(self.probs for _ in range(self.alphabet_size))
        return self.Q

    @property
    def backward(self):
        """Backward kernel ``K[b][a] = P(X_0 = a | X_1 = b)``."""
        if self.kind == BERNOULLI:
            return tuple(self.probs for _ in range(self.alphabet_size))
        pi, Q = self.pi, self.Q
        n = self.alphabet_size
        return tuple(tuple(pi[a] * Q[a][b] / pi[b] for a in range(n)) for b in range(n))

    def array(self, rows):
        dtype = object if self.arithmetic == EXACT else float
        return np.array(rows, dtype=dtype)

    @property
    def classes(self):
        """Closed communicating classes, as sorted tuples of states."""
        return _closed_classes(self)

    @property
    def periods(self):
        return tuple(_period(self, c) for c in self.classes)

    @property
    def is_aperiodic(self):
        return all(p == 1 for p in self.periods)

    def class_of(self):
        """Map state -> index of its closed class."""
        out = {}
        for i, c in enumerate(self.classes):
            for s in c:
                out[s] = i
        return out

    def path_weights(self, depth):
        return _path_weights(self, depth)


def _support_graph(factor):
    rows = factor.transition
    n = factor.alphabet_size
    return csr_matrix(np.array([[1 if rows[i][j] > 0 else 0 for j in range(n)] for i in range(n)]))


@lru_cache(maxsize=None)
def _closed_classes(factor):
    graph = _support_graph(factor)
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    comps = [tuple(int(s) for s in np.flatnonzero(labels == c)) for c in range(ncomp)]
    closed = []
    dense = graph.toarray()
    for comp in comps:
        members = set(comp)
        if all(j in members for i in comp for j in np.flatnonzero(dense[i])):
            closed.append(comp)
    return tuple(sorted(closed))


@lru_cache(maxsize=None)
def _period(factor, states):
    dense = _support_graph(factor).toarray()
    level = {states[0]: 0}
    queue = [states[0]]
    g = 0
    while queue:
        u = queue.pop(0)
        for v in np.flatnonzero(dense[u]):
            v = int(v)
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            else:
                g = math.gcd(g, level[u] + 1 - level[v])
    return g if g else 1


@lru_cache(maxsize=None)
def _path_weights(factor, depth):
    if depth == 0:
        return factor.array(1 if factor.arithmetic == EXACT else 1.0)
    w = factor.array(factor.marginal)
    step = factor.array(factor.transition)
    for _ in range(depth - 1):
        w = w[..., :, None] * step
    w.setflags(write=False)
    return w


def _close(a, b, arithmetic):
    return a == b if arithmetic == EXACT else abs(a - b) <= FACTOR_TOL


def _check_prob_vector(vec, arithmetic, what):
    if any(p < 0 for p in vec):
        raise NegativeProbability(f"{what} has a negative entry: {vec}")
    if not _close(sum(vec), 1, arithmetic):
        raise NonStochasticMatrix(f"{what} sums to {sum(vec)}, not 1")


def stationary_distribution(Q):
    """Exact stationary distribution of a rational stochastic matrix.

    Raises NoStationaryDistribution when it is not unique.
    """
    n = len(Q)
    rows = []
    for b in range(n):
        rows.append({a: Q[a][b] - (1 if a == b else 0) for a in range(n)})
    rhs = [Fraction(0)] * n
    rows.append({a: Fraction(1) for a in range(n)})
    rhs.append(Fraction(1))
    x, rank = solve_exact(rows, rhs, n)
    if x is None or rank < n:
        raise NoStationaryDistribution("transition matrix has no unique stationary distribution")
    return tuple(x)


def make_factor(kind, params, arithmetic=EXACT):
    """Build and validate a Factor.

    ``params`` holds ``probs`` (Bernoulli) or ``Q`` and optionally ``pi``
    (Markov).  Scalars may be ints, Fractions, floats or strings.
    """
    kind = kind.lower()
    if kind == BERNOULLI:
        probs = tuple(_coerce(p, arithmetic) for p in params["probs"])
        if len(probs) < 2:
            raise NonStochasticMatrix("alphabet size must be at least 2")
        _check_prob_vector(probs, arithmetic, "probs")
        if any(p == 0 for p in probs):
            raise ZeroMeasureState(f"letter with zero probability in {probs}")
        return Factor(BERNOULLI, len(probs), probs=probs, arithmetic=arithmetic)
    if kind != MARKOV:
        raise ValueError(f"unknown factor kind {kind!r}")
    Q = tuple(tuple(_coerce(q, arithmetic) for q in row) for row in params["Q"])
    n = len(Q)
    if n < 2 or any(len(row) != n for row in Q):
        raise NonStochasticMatrix("Q must be square with at least 2 states")
    for i, row in enumerate(Q):
        _check_prob_vector(row, arithmetic, f"row {i} of Q")
    if params.get("pi") is None:
        if arithmetic == EXACT:
            pi = stationary_distribution(Q)
        else:
            pi = _float_stationary(Q)
    else:
        pi = tuple(_coerce(p, arithmetic) for p in params["pi"])
        if len(pi) != n:
            raise NoStationaryDistribution("pi has the wrong length")
        _check_prob_vector(pi, arithmetic, "pi")
    for b in range(n):
        if not _close(sum(pi[a] * Q[a][b] for a in range(n)), pi[b], arithmetic):
            raise NoStationaryDistribution(f"pi={pi} is not stationary for Q")
    if any(p <= 0 for p in pi):
        raise ZeroMeasureState(f"stationary distribution has zero-measure states: {pi}")
    factor = Factor(MARKOV, n, Q=Q, pi=pi, arithmetic=arithmetic)
    covered = {s for c in factor.classes for s in c}
    if len(covered) != n:
        raise NoStationaryDistribution("some states lie outside every closed class")
    return factor


def _float_stationary(Q):
    q = np.array(Q, dtype=float)
    vals, vecs = np.linalg.eig(q.T)
    ones = np.flatnonzero(np.abs(vals - 1) < 1e-10)
    if len(ones) != 1:
        raise NoStationaryDistribution("transition matrix has no unique stationary distribution")
    v = np.real(vecs[:, ones[0]])
    return tuple(float(x) for x in v / v.sum())


# ---------------------------------------------------------------- systems

@dataclass(frozen=True)
class SystemSpec:
    factors: tuple
    arithmetic: str = EXACT
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("a system needs at least one factor")
        if self.arithmetic not in (EXACT, FLOAT):
            raise ValueError(f"unknown arithmetic {self.arithmetic!r}")
        for fac in self.factors:
            if fac.arithmetic != self.arithmetic:
                raise SystemMismatch("factor arithmetic differs from system arithmetic")

    @property
    def d(self):
        return len(self.factors)

    @property
    def alphabet_sizes(self):
        return tuple(f.alphabet_size for f in self.factors)

    @property
    def exact(self):
        return self.arithmetic == EXACT

    @property
    def dtype(self):
        return object if self.exact else float

    def scalar(self, value):
        return _coerce(value, self.arithmetic)

    def factor(self, k):
        return self.factors[k - 1]

    def shape(self, window):
        return tuple(a for a, w in zip(self.alphabet_sizes, window) for _ in range(w))

    def table_length(self, window):
        return math.prod(a ** w for a, w in zip(self.alphabet_sizes, window))

    def with_tol(self, tol):
        return SystemSpec(self.factors, self.arithmetic, tol)


def make_system(factors, arithmetic=None):
    factors = tuple(factors)
    arithmetic = arithmetic or factors[0].arithmetic
    return SystemSpec(factors, arithmetic)


def offsets(window):
    out, acc = [], 0
    for w in window:
        out.append(acc)
        acc += w
    return out


@lru_cache(maxsize=256)
def path_weights(system, window):
    """Probability of every cylinder in ``window`` (same layout as tables)."""
    w = np.array(1 if system.exact else 1.0, dtype=system.dtype)
    for fac, depth in zip(system.factors, window):
        pw = fac.path_weights(depth)
        w = np.multiply.outer(w, pw) if pw.ndim else w * pw
    w = np.asarray(w, dtype=system.dtype)
    w.setflags(write=False)
    return w


# ---------------------------------------------------------------- functions

class CylinderFunction:
    """Immutable function of finitely many coordinates per direction."""

    __slots__ = ("system", "window", "table")

    def __init__(self, system, window, table):
        window = tuple(int(w) for w in window)
        if len(window) != system.d or any(w < 0 for w in window):
            raise WindowError(f"window {window} invalid for d={system.d}")
        shape = system.shape(window)
        arr = np.asarray(table, dtype=object)
        if arr.size != math.prod(shape):
            raise WindowError(f"table has {arr.size} entries, window {window} needs {math.prod(shape)}")
        arr = arr.reshape(shape)
        if system.exact:
            arr = _to_fractions(arr)
        else:
            arr = arr.astype(float)
        self._set(system, window, arr)

    def _set(self, system, window, table):
        table.setflags(write=False)
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "table", table)

    @classmethod
    def _raw(cls, system, window, table):
        obj = cls.__new__(cls)
        table = np.array(table, dtype=system.dtype).reshape(system.shape(window))
        obj._set(system, tuple(window), table)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("CylinderFunction is immutable")

    # -- arithmetic
    def _binary(self, other, op):
        if isinstance(other, CylinderFunction):
            a, b = align(self, other)
            return CylinderFunction._raw(a.system, a.window, op(a.table, b.table))
        c = self.system.scalar(other)
        return CylinderFunction._raw(self.system, self.window, op(self.table, c))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = self.system.scalar(other)
        return CylinderFunction._raw(self.system, self.window, self.table / c)

    def __neg__(self):
        return CylinderFunction._raw(self.system, self.window, -self.table)

    def __eq__(self, other):
        if not isinstance(other, CylinderFunction):
            return NotImplemented
        if other.system != self.system:
            return False
        # equal canonical forms <=> equal tables on the joint window
        a, b = align(self, other)
        if self.system.exact:
            return bool(np.all(a.table == b.table))
        return bool(np.allclose(a.table, b.table, rtol=0, atol=self.system.tol))

    __hash__ = None

    def __call__(self, *coords):
        """Evaluate at per-direction coordinate tuples (extra coordinates ignored)."""
        idx = []
        for w, c in zip(self.window, coords):
            idx.extend(tuple(c)[:w])
        return self.table[tuple(idx)]

    def __repr__(self):
        return f"CylinderFunction(window={self.window}, table={self.table.ravel().tolist()!r})"

    def flat(self):
        return self.table.ravel()

    @property
    def d(self):
        return self.system.d


def _to_fractions(arr):
    out = np.empty(arr.shape, dtype=object)
    flat_in, flat_out = arr.ravel(), out.ravel()
    for i, v in enumerate(flat_in):
        flat_out[i] = parse_scalar(v)
    return out


def function(system, window, table):
    return CylinderFunction(system, window, table)


def constant(system, value):
    return CylinderFunction._raw(system, (0,) * system.d, system.scalar(value))


def zero(system):
    return constant(system, 0)


def cylinder(system, window, fn):
    """Tabulate ``fn(x, y, ...)`` where each argument is the letter tuple of one direction."""
    window = tuple(window)
    ranges = [list(product(range(a), repeat=w)) for a, w in zip(system.alphabet_sizes, window)]
    values = [fn(*combo) for combo in product(*ranges)]
    return CylinderFunction(system, window, values)


def encode(system, window, coords):
    """Mixed-radix index of a per-direction coordinate tuple."""
    idx = 0
    for a, w, c in zip(system.alphabet_sizes, window, coords):
        for i in range(w):
            idx = idx * a + c[i]
    return idx


def decode(system, window, index):
    out = []
    for a, w in reversed(list(zip(system.alphabet_sizes, window))):
        digits = []
        for _ in range(w):
            index, r = divmod(index, a)
            digits.append(r)
        out.append(tuple(reversed(digits)))
    return tuple(reversed(out))


def check_same_system(f, g):
    if f.system != g.system:
        raise SystemMismatch("functions live on different systems")


def extend(f, window):
    """Re-tabulate ``f`` on a larger window (new coordinates are appended per direction)."""
    window = tuple(window)
    if window == f.window:
        return f
    if any(W < w for W, w in zip(window, f.window)):
        raise WindowError(f"cannot shrink window {f.window} to {window}")
    sizes = f.system.alphabet_sizes
    mid_shape = []
    for a, w, W in zip(sizes, f.window, window):
        mid_shape.extend([a] * w + [1] * (W - w))
    full = f.system.shape(window)
    table = np.broadcast_to(f.table.reshape(mid_shape), full)
    return CylinderFunction._raw(f.system, window, np.array(table, dtype=f.system.dtype))


def join_window(*windows):
    return tuple(max(ws) for ws in zip(*windows))


def align(f, g):
    check_same_system(f, g)
    w = join_window(f.window, g.window)
    return extend(f, w), extend(g, w)


ROUNDOFF = 64 * np.finfo(float).eps


def _constant_along(table, axis, system):
    first = np.take(table, [0], axis=axis)
    if system.exact:
        return bool(np.all(table == first))
    # round-off only: a comparison tolerance here would discard small signals
    scale = float(np.max(np.abs(table), initial=0.0))
    return bool(np.all(np.abs(table - first) <= ROUNDOFF * scale))


def canonicalize(f):
    """Minimal-window representative of ``f``."""
    window = list(f.window)
    table = f.table
    for k in range(f.d):
        while window[k] > 0:
            axis = offsets(window)[k] + window[k] - 1
            if not _constant_along(table, axis, f.system):
                break
            table = np.take(table, 0, axis=axis)
            window[k] -= 1
    if tuple(window) == f.window:
        return f
    return CylinderFunction._raw(f.system, tuple(window), table)


def expectation(f):
    w = path_weights(f.system, f.window)
    return (w * f.table).sum() if f.table.ndim else f.table[()]


def inner_product(f, g):
    a, b = align(f, g)
    return expectation(CylinderFunction._raw(a.system, a.window, a.table * b.table))


def norm_sq(f):
    return inner_product(f, f)


def norm_l2(f):
    return math.sqrt(float(norm_sq(f)))


def is_zero(f):
    """L2-zero test: exact in rational mode, ``norm <= tol`` in float mode."""
    n = norm_sq(f)
    if f.system.exact:
        return n == 0
    return n <= f.system.tol ** 2


def equal_ae(f, g):
    """Equality as elements of L2 (values on null cylinders are ignored)."""
    return is_zero(f - g)


def random_function(system, window, rng, numerators=4, denominators=4):
    """Seeded random table with small rational entries (floats in float mode)."""
    n = system.table_length(window)
    nums = rng.integers(-numerators, numerators + 1, size=n)
    dens = rng.integers(1, denominators + 1, size=n)
    if system.exact:
        vals = [Fraction(int(a), int(b)) for a, b in zip(nums, dens)]
    else:
        vals = [float(a) / float(b) for a, b in zip(nums, dens)]
    return CylinderFunction(system, window, vals)
