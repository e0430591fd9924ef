"""Slow, direct reference implementations used only as test oracles.

Everything here is written from the definitions with plain Python lists and
sorting, independent of the compiled kernels in the package.
"""

import itertools
import math
from fractions import Fraction

INF = math.inf


def dist(a, b):
    # square by multiplication: libm pow(d, 2) is not always correctly rounded
    return math.sqrt(sum((float(x) - float(y)) * (float(x) - float(y)) for x, y in zip(a, b)))


def binomial_cdf_zero(phi, tau):
    """P(no successes in tau Bernoulli(phi) trials), summed from the pmf."""
    # F(0) = sum over k<=0 of C(tau,k) phi^k (1-phi)^(tau-k); exact in rationals
    p = Fraction(phi)
    return sum(math.comb(tau, k) * p**k * (1 - p) ** (tau - k) for k in range(0, 1))


def binomial_cdf_zero_complement(phi, tau):
    """Same probability as one minus the pmf mass on 1..tau, in exact integers."""
    p = Fraction(phi)
    D = p.denominator
    a = p.numerator
    b = D - a
    rest = sum(math.comb(tau, k) * a**k * b ** (tau - k) for k in range(1, tau + 1))
    return Fraction(D**tau - rest, D**tau)


def kth_radius(core_x, core_t, pool, phi):
    """pool: list of (x, t). Distance to the ceil(phi*|pool|)-th neighbour, core excluded."""
    k = max(1, math.ceil(phi * len(pool) - 1e-9))
    ds = sorted(dist(core_x, x) for x, t in pool if t != core_t)
    return ds[k - 1]


def min_size(phi):
    return math.ceil(max(10 / phi, 10 / (1 - phi)) - 1e-9)


class RefRegionSet:
    """List-of-dicts region set following the four-step update literally."""

    def __init__(self, phi, max_buffer, alpha=0.01, training=()):
        self.phi, self.max_buffer, self.alpha = phi, max_buffer, alpha
        self.regions = []
        pool = [(tuple(x), t) for x, _, t in training]
        for x, y, t in training:
            if len(pool) < min_size(phi):
                r = INF
            else:
                r = kth_radius(x, t, pool, phi)
            self.regions.append({"x": tuple(x), "y": y, "t": t, "r": r, "misses": 0, "w": 1.0})
        if len(self.regions) > max_buffer:
            self.regions = sorted(self.regions, key=lambda g: g["t"])[-max_buffer:]

    def weight(self, misses):
        return (1.0 - self.phi) ** misses

    def update(self, x, y, t):
        x = tuple(x)
        pool = [(g["x"], g["t"]) for g in self.regions]
        for g in self.regions:
            if dist(x, g["x"]) <= g["r"]:
                g["misses"] = 0
                g["w"] = 1.0
                if len(pool) >= min_size(self.phi):
                    g["r"] = kth_radius(g["x"], g["t"], pool, self.phi)
                else:
                    g["r"] = INF
            else:
                g["misses"] += 1
                g["w"] = self.weight(g["misses"])
        removed = [g["t"] for g in self.regions if g["w"] < self.alpha]
        self.regions = [g for g in self.regions if g["w"] >= self.alpha]
        pool = [(g["x"], g["t"]) for g in self.regions]
        if len(pool) >= min_size(self.phi):
            k = max(1, math.ceil(self.phi * len(pool) - 1e-9))
            r = sorted(dist(x, p) for p, _ in pool)[k - 1]
        else:
            r = INF
        self.regions.append({"x": x, "y": y, "t": t, "r": r, "misses": 0, "w": 1.0})
        if len(self.regions) > self.max_buffer:
            victim = min(self.regions, key=lambda g: (g["w"], g["t"]))
            removed.append(victim["t"])
            self.regions.remove(victim)
        return sorted(removed)

    def snapshot(self):
        return sorted((g["t"], g["r"], g["misses"], g["w"]) for g in self.regions)


def jaccard_rdd(a, b):
    a, b = set(a), set(b)
    u = len(a | b)
    return 0.0 if u == 0 else 1.0 - len(a & b) / u


def naive_max_rdd(core_sets, voting_size):
    """Enumerate every combination, recomputing each RDD from the sets."""
    best, best_val = None, -1.0
    for combo in itertools.combinations(range(len(core_sets)), voting_size):
        total = 0.0
        for j in range(voting_size - 1):
            for k in range(j + 1, voting_size):
                total += jaccard_rdd(core_sets[combo[j]], core_sets[combo[k]])
        val = 2.0 * total / (voting_size * (voting_size - 1))
        if val > best_val:
            best, best_val = combo, val
    return best, best_val


def ibk(training, query, k, c):
    """training: list of (x, y, t). Inverse-distance k-NN class probabilities."""
    if not training:
        return [1.0 / c] * c
    ranked = sorted(training, key=lambda r: (dist(r[0], query), r[2]))[:k]
    d0 = dist(ranked[0][0], query)
    if d0 == 0.0:
        out = [0.0] * c
        out[ranked[0][1]] = 1.0
        return out
    w = [0.0] * c
    for x, y, _ in ranked:
        w[y] += 1.0 / dist(x, query)
    s = sum(w)
    return [v / s for v in w]


def hard_vote(vectors):
    """Count of argmax votes per class; label is the class with most votes."""
    c = len(vectors[0])
    counts = [0] * c
    for v in vectors:
        counts[max(range(c), key=lambda i: (v[i], -i))] += 1
    return counts, max(range(c), key=lambda i: (counts[i], -i))
