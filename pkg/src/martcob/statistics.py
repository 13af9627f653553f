"""Partial sums, variance identities and a Monte Carlo variance check."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
import math
import os
from statistics import NormalDist

import numpy as np

from .decomposition import (_martingale_part, component, h_component,
                            subsets)
from .errors import DimensionNotOne, NotSolvable, SizeCapExceeded, Unsolvable
from .operators import koopman, members, transfer
from .poisson import solve_direct
from .space import MARKOV, canonicalize, expectation, norm_sq

DEFAULT_SIZE_CAP = 2 ** 24
QUANTILE_PROBS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)


def size_cap():
    return int(os.environ.get("MARTCOB_SIZE_CAP", DEFAULT_SIZE_CAP))


def _check_cap(f, N):
    window = tuple(w + n - 1 for w, n in zip(f.window, N))
    if f.system.table_length(window) > size_cap():
        raise SizeCapExceeded(f"partial sum over N={N} needs window {window}")


def _box_sum(f, N, step):
    N = tuple(N)
    if any(n <= 0 for n in N):
        return 0 * canonicalize(f)
    f = canonicalize(f)
    _check_cap(f, N)
    for k, Nk in enumerate(N, start=1):
        acc, t = f, f
        for _ in range(Nk - 1):
            t = canonicalize(step(k, t))
            acc = acc + t
        f = canonicalize(acc)
    return f


def partial_sum(f, N):
    """``S_N f``: sum of ``U^n f`` over the box ``0 <= n <= N - 1``."""
    return _box_sum(f, N, koopman)


def adjoint_partial_sum(f, N):
    return _box_sum(f, N, transfer)


def martingale_part(g):
    """``prod_l (I - U_l U_l^*) g``, i.e. the component ``A_empty``."""
    for l in range(1, g.d + 1):
        g = canonicalize(_martingale_part(l, g))
    return g


def sigma2_empty(g):
    """Squared norm of the martingale part, directly and by inclusion-exclusion."""
    direct = norm_sq(martingale_part(g))
    expansion = 0 * direct
    for S in subsets(g.d):
        sign = -1 if bin(S).count("1") % 2 else 1
        expansion = expansion + sign * norm_sq(h_component(g, S))
    return {"direct": direct, "expansion": expansion}


def cond_variance_d1(g):
    """Two forms of the conditional variance of ``g - U U^* g`` given ``T^{-1} F``."""
    if g.d != 1:
        raise DimensionNotOne("conditional variance formulas are one-dimensional")
    ustar_g = transfer(1, g)
    form1 = koopman(1, transfer(1, g * g)) - koopman(1, ustar_g * ustar_g)
    cond_g = koopman(1, ustar_g)
    form2 = koopman(1, transfer(1, g * g)) - cond_g * cond_g
    return {"form1": canonicalize(form1), "form2": canonicalize(form2)}


def md_sum_norm(g, N):
    """``(|S_N A_empty|^2, (prod N_k) * sigma2_empty)``."""
    A = martingale_part(g)
    lhs = norm_sq(partial_sum(A, N))
    return lhs, math.prod(N) * norm_sq(A)


def md_sum_norm_identity(g, N):
    lhs, rhs = md_sum_norm(g, N)
    return lhs == rhs if g.system.exact else abs(lhs - rhs) <= g.system.tol


def coboundary_bound_sq(g, S):
    """Squared telescoping bound ``4^{|S|} |prod_{l not in S}(I - U_l U_l^*) h_S|^2``."""
    h = h_component(g, S)
    for l in range(1, g.d + 1):
        if l not in members(S, g.d):
            h = canonicalize(_martingale_part(l, h))
    return 4 ** bin(S).count("1") * norm_sq(h)


def coboundary_bound_scan(g, S, N_list):
    """Normalised squared norms ``|S_N A_S|^2 / prod_{l not in S} N_l`` for each ``N``.

    Squared norms keep the scan exact; take square roots for the norms.
    """
    if S == 0:
        raise ValueError("coboundary scan needs a non-empty direction set")
    A = component(g, S)
    outside = [l for l in range(1, g.d + 1) if l not in members(S, g.d)]
    out = []
    for N in N_list:
        scale = math.prod(N[l - 1] for l in outside)
        out.append(norm_sq(partial_sum(A, N)) / scale)
    return out


def exact_variance(f, N):
    s = partial_sum(f, N)
    m = expectation(s)
    return norm_sq(s) - m * m


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class Moments:
    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    @classmethod
    def of(cls, x):
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return cls()
        mu = float(x.mean())
        c = x - mu
        c2 = c * c
        return cls(x.size, mu, float(c2.sum()), float((c2 * c).sum()), float((c2 * c2).sum()))

    def merge(self, other):
        """Pairwise combination of central moment sums (Pebay 2008)."""
        na, nb = self.n, other.n
        if na == 0:
            return other
        if nb == 0:
            return self
        n = na + nb
        delta = other.mean - self.mean
        mean = self.mean + delta * nb / n
        m2 = self.m2 + other.m2 + delta ** 2 * na * nb / n
        m3 = (self.m3 + other.m3 + delta ** 3 * na * nb * (na - nb) / n ** 2
              + 3 * delta * (na * other.m2 - nb * self.m2) / n)
        m4 = (self.m4 + other.m4
              + delta ** 4 * na * nb * (na * na - na * nb + nb * nb) / n ** 3
              + 6 * delta ** 2 * (na * na * other.m2 + nb * nb * self.m2) / n ** 2
              + 4 * delta * (na * other.m3 - nb * self.m3) / n)
        return Moments(n, mean, m2, m3, m4)

    @property
    def variance(self):
        return self.m2 / (self.n - 1) if self.n > 1 else 0.0

    @property
    def variance_stderr(self):
        if self.n < 4:
            return math.inf
        n = self.n
        s2 = self.variance
        mu4 = self.m4 / n
        return math.sqrt(max(mu4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n)


def pairwise_merge(parts):
    parts = list(parts)
    if not parts:
        return Moments()
    while len(parts) > 1:
        merged = [a.merge(b) for a, b in zip(parts[::2], parts[1::2])]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


@dataclass
class McReport:
    samples: int
    seed: int
    N: tuple
    workers: int
    empirical_mean: float
    empirical_variance: float
    target_sigma2: float
    sigma2_empty: float
    stderr: float
    passed: bool
    quantiles: dict = field(default_factory=dict)

    def as_dict(self):
        out = asdict(self)
        out["N"] = list(self.N)
        out["pass"] = out.pop("passed")
        return out


def worker_generator(seed, worker):
    """Counter-based substream for ``(seed, worker)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(worker,))))


def sample_paths(factor, depth, count, rng):
    """``count`` stationary paths of length ``depth`` for one factor."""
    a = factor.alphabet_size
    if depth == 0:
        return np.zeros((count, 0), dtype=np.int64)
    if factor.kind != MARKOV:
        p = np.array([float(x) for x in factor.probs])
        return rng.choice(a, size=(count, depth), p=p)
    pi = np.array([float(x) for x in factor.pi])
    cum = np.cumsum(np.array(factor.Q, dtype=float), axis=1)
    cum[:, -1] = 1.0
    out = np.empty((count, depth), dtype=np.int64)
    out[:, 0] = rng.choice(a, size=count, p=pi)
    for i in range(1, depth):
        u = rng.random(count)
        out[:, i] = (u[:, None] >= cum[out[:, i - 1]]).sum(axis=1)
    return out


def _worker_values(table, system, window, count, rng):
    idx = np.zeros(count, dtype=np.int64)
    for fac, w in zip(system.factors, window):
        paths = sample_paths(fac, w, count, rng)
        for i in range(w):
            idx = idx * fac.alphabet_size + paths[:, i]
    return table[idx]


def mc_simulate(f, N, samples, seed, workers=1, threads=None):
    """Empirical variance of ``(prod N)^{-1/2} S_N f`` against its exact value.

    Samples are split across ``workers`` deterministic substreams; the report is
    bit-identical for fixed ``(seed, samples, workers)`` whatever ``threads`` is.
    """
    N = tuple(N)
    try:
        g = solve_direct(f).solution
    except Unsolvable as exc:
        raise NotSolvable(str(exc)) from exc
    scale = math.prod(N)
    s = partial_sum(f, N)
    table = np.array([float(v) for v in s.flat()]) / math.sqrt(scale)
    target = float(exact_variance(f, N)) / scale
    sig = float(sigma2_empty(g)["direct"])

    counts = [samples // workers + (1 if w < samples % workers else 0) for w in range(workers)]

    def run(w):
        return _worker_values(table, f.system, s.window, counts[w], worker_generator(seed, w))

    if threads and threads > 1 and workers > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run, range(workers)))
    else:
        chunks = [run(w) for w in range(workers)]
    mom = pairwise_merge(Moments.of(c) for c in chunks)
    values = np.concatenate(chunks)
    var = mom.variance
    se = mom.variance_stderr
    passed = abs(var - target) <= 3 * se if se > 0 else abs(var - target) <= 1e-12
    sd = math.sqrt(var) if var > 0 else 0.0
    quant = {}
    if sd > 0:
        ref = NormalDist(mom.mean, sd)
        for p in QUANTILE_PROBS:
            quant[str(p)] = {"empirical": float(np.quantile(values, p)), "normal": ref.inv_cdf(p)}
    return McReport(samples, seed, N, workers, mom.mean, var, target, sig, se, bool(passed), quant)
