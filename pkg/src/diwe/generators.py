"""Seeded synthetic drift streams.

Randomness: every generator draws from NumPy's PCG64 bit generator seeded
through ``SeedSequence(seed)``, spawned into independent child streams for
model parameters, instance sampling and label noise. Gaussian variates use
the basic Box-Muller transform on PCG64 uniforms,
``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``, one variate per uniform pair, so a
stream depends only on PCG64's documented output and IEEE arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Stream, StreamSchema

KINDS = ("oned_drift", "sea_sudden", "sea_gradual", "hyperplane", "rbf", "rbf_regional")

SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)
ONED_LENGTH = 4000


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF).spawn(count)
    return [np.random.Generator(np.random.PCG64(s)) for s in children]


def box_muller(rng: np.random.Generator, size) -> np.ndarray:
    u1 = rng.random(size)
    u2 = rng.random(size)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)


def flip_labels(y: np.ndarray, c: int, noise: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Replace each label with probability ``noise`` by a different class."""
    flip = rng.random(y.size) < noise
    shift = rng.integers(1, c, size=y.size)
    out = np.where(flip, (y + shift) % c, y)
    return out, flip


# -- one-dimensional sudden / incremental drift --------------------------------


def oned_parameters(t: np.ndarray):
    """Per-time ``(sd_a, mean_b)`` of the mixture N(0, sd_a) and N(mean_b, 0.5)."""
    t = np.asarray(t)
    sd_a = np.ones(t.shape)
    mean_b = np.full(t.shape, 2.0)
    inc = (t >= 1251) & (t <= 1750)
    sd_a[inc] = 1.0 + 0.002 * (t[inc] - 1250)
    mean_b[inc] = 2.0 + 0.002 * (t[inc] - 1250)
    mid = (t >= 1751) & (t <= 2500)
    sd_a[mid], mean_b[mid] = 2.0, 3.0
    late = t >= 2501
    sd_a[late], mean_b[late] = 2.0, 5.0
    return sd_a, mean_b


def gen_oned_drift(seed: int) -> Stream:
    """4000 one-dimensional points: stationary, incremental drift, sudden drift.

    Each point comes from an equal-weight mixture of a wide component around
    0 and a narrow one (sd 0.5) whose mean moves 2 -> 3 during t in
    [1251, 1750] and jumps to 5 after t = 2500. Labels are all 0;
    ``meta["component"]`` records which component produced each point.
    """
    rng_pick, rng_val = _streams(seed, 2)
    t = np.arange(1, ONED_LENGTH + 1)
    sd_a, mean_b = oned_parameters(t)
    comp = (rng_pick.random(ONED_LENGTH) >= 0.5).astype(np.int64)
    z = box_muller(rng_val, ONED_LENGTH)
    x = np.where(comp == 1, mean_b + 0.5 * z, sd_a * z)
    return Stream(
        x[:, None], np.zeros(ONED_LENGTH, dtype=np.int64), StreamSchema(1, 2),
        meta={"kind": "oned_drift", "seed": seed, "component": comp},
    )


# -- SEA ---------------------------------------------------------------------------


def sea_concepts(length: int, gradual: bool) -> np.ndarray:
    """Concept index (0..3) for t = 1..length."""
    t = np.arange(1, length + 1)
    concept = np.minimum((t - 1) * 4 // length, 3)
    if gradual:
        start = length // 4 - 250
        lo, hi = max(start, 1), start + 500
        rel = t - start
        window = (t >= lo) & (t < hi)
        # alternating 50-instance blocks, the first block on the new concept
        concept = np.where(window, np.where((rel // 50) % 2 == 0, 1, 0), concept)
    return concept


def sea_label(x1, x2, theta) -> np.ndarray:
    return (np.asarray(x1) + np.asarray(x2) <= theta).astype(np.int64)


def gen_sea(variant: str, seed: int, length: int = 10_000, noise: float = 0.10) -> Stream:
    """SEA concepts: x in [0, 10]^3, class 1 iff x1 + x2 <= theta.

    Four equal-length concepts with theta = 8, 9, 7, 9.5. The gradual variant
    alternates concepts 1 and 2 in 50-instance blocks over the 500 instances
    centred on the first concept boundary.
    """
    if variant not in ("sudden", "gradual"):
        raise ValueError(f"unknown SEA variant {variant!r}")
    rng_x, rng_noise = _streams(seed, 2)
    X = rng_x.random((length, 3)) * 10.0
    concept = sea_concepts(length, variant == "gradual")
    theta = np.asarray(SEA_THRESHOLDS)[concept]
    clean = sea_label(X[:, 0], X[:, 1], theta)
    y, flipped = flip_labels(clean, 2, noise, rng_noise)
    return Stream(
        X, y, StreamSchema(3, 2),
        meta={"kind": f"sea_{variant}", "seed": seed, "noise": noise,
              "concept": concept, "clean_label": clean, "flipped": flipped},
    )


# -- rotating hyperplane -------------------------------------------------------------


def gen_hyperplane(
    seed: int, length: int = 10_000, n_features: int = 10, n_drift: int = 2,
    magnitude: float = 0.001, reverse_prob: float = 0.10, noise: float = 0.10,
) -> Stream:
    """Class 1 iff sum(w_i x_i) >= theta with theta = sum(w) / 2.

    After every instance the first ``n_drift`` weights move by ``magnitude``
    along their current direction; each direction reverses with probability
    ``reverse_prob``. theta is recomputed from the weights, so the boundary
    rotates incrementally.
    """
    rng_model, rng_x, rng_drift, rng_noise = _streams(seed, 4)
    w = rng_model.random(n_features)
    direction = np.ones(n_drift)
    X = rng_x.random((length, n_features))
    clean = np.empty(length, dtype=np.int64)
    weights = np.empty((length, n_features))
    reverse = rng_drift.random((length, n_drift)) < reverse_prob
    for i in range(length):
        weights[i] = w
        clean[i] = int(X[i] @ w >= 0.5 * w.sum())
        w[:n_drift] += direction * magnitude
        direction = np.where(reverse[i], -direction, direction)
    y, flipped = flip_labels(clean, 2, noise, rng_noise)
    return Stream(
        X, y, StreamSchema(n_features, 2),
        meta={"kind": "hyperplane", "seed": seed, "noise": noise, "magnitude": magnitude,
              "n_drift": n_drift, "weights": weights, "clean_label": clean, "flipped": flipped},
    )


# -- random RBF with moving centroids --------------------------------------------------


def gen_rbf(
    regional: bool, seed: int, length: int = 10_000, n_features: int = 10,
    n_classes: int = 5, n_centroids: int = 50, speed: float = 0.001,
    n_drift: int | None = None,
) -> Stream:
    """Gaussian blobs around random centroids, some of which drift.

    Centroids get a uniform centre in [0, 1]^n, a class, a selection weight
    and a spread. An instance picks a centroid by weight and is displaced
    from its centre along a random direction by a Gaussian amount scaled by
    the spread. Drifting centroids (all 50, or the first 10 when
    ``regional``) move ``speed`` per instance along a fixed random unit
    direction, reflecting off the unit cube.
    """
    if n_drift is None:
        n_drift = 10 if regional else n_centroids
    rng_model, rng_pick, rng_dir, rng_mag = _streams(seed, 4)
    centres = rng_model.random((n_centroids, n_features))
    labels = rng_model.integers(0, n_classes, size=n_centroids)
    weights = rng_model.random(n_centroids)
    spread = rng_model.random(n_centroids)
    velocity = rng_model.random((n_drift, n_features)) * 2.0 - 1.0
    velocity /= np.linalg.norm(velocity, axis=1, keepdims=True)
    velocity *= speed
    initial = centres.copy()

    cdf = np.cumsum(weights) / weights.sum()
    pick = np.minimum(np.searchsorted(cdf, rng_pick.random(length), side="right"), n_centroids - 1)
    raw_dir = rng_dir.random((length, n_features)) * 2.0 - 1.0
    raw_dir /= np.linalg.norm(raw_dir, axis=1, keepdims=True)
    mag = box_muller(rng_mag, length)

    X = np.empty((length, n_features))
    for i in range(length):
        if n_drift:
            moving = centres[:n_drift]
            moving += velocity
            over = moving > 1.0
            under = moving < 0.0
            if over.any() or under.any():
                np.copyto(moving, 1.0, where=over)
                np.copyto(moving, 0.0, where=under)
                velocity[over | under] *= -1.0
        j = pick[i]
        X[i] = centres[j] + raw_dir[i] * (mag[i] * spread[j])
    y = labels[pick].astype(np.int64)
    return Stream(
        X, y, StreamSchema(n_features, n_classes),
        meta={"kind": "rbf_regional" if regional else "rbf", "seed": seed, "speed": speed,
              "n_drift": n_drift, "initial_centres": initial, "final_centres": centres.copy(),
              "centroid": pick},
    )


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    seed: int = 1
    length: int | None = None
    noise: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator {self.kind!r}; choose from {KINDS}")
        if self.length is not None and self.length < 1:
            raise ValueError("length must be >= 1")
        if self.noise is not None and not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")


def generate(spec: GeneratorSpec) -> Stream:
    kw = dict(spec.params)
    if spec.kind == "oned_drift":
        return gen_oned_drift(spec.seed)
    if spec.length is not None:
        kw["length"] = spec.length
    if spec.kind in ("sea_sudden", "sea_gradual"):
        if spec.noise is not None:
            kw["noise"] = spec.noise
        return gen_sea(spec.kind.split("_")[1], spec.seed, **kw)
    if spec.kind == "hyperplane":
        if spec.noise is not None:
            kw["noise"] = spec.noise
        return gen_hyperplane(spec.seed, **kw)
    return gen_rbf(spec.kind == "rbf_regional", spec.seed, **kw)
