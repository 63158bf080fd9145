"""Distribution specs and reproducible random streams.

Every random draw in the package goes through an :class:`RngStream`.  A stream
is a value (seed + hierarchical path); the numpy generator behind it is derived
by hashing the path into a :class:`numpy.random.SeedSequence` spawn key, so the
draws at a site depend only on ``(seed, path)`` and never on scheduling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

__all__ = [
    "Beta",
    "Gamma",
    "Dirichlet",
    "Poisson",
    "Uniform",
    "PointMass",
    "DistSpec",
    "RngStream",
    "dist_from_dict",
    "sample",
    "sample_multinomial_entry",
    "categorical",
    "generic_vs_targeted_entry",
]


def _positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class Beta:
    a: float
    b: float

    def __post_init__(self):
        _positive("Beta a", self.a)
        _positive("Beta b", self.b)

    @property
    def mean(self):
        return self.a / (self.a + self.b)

    @property
    def var(self):
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1.0))

    def sample(self, rng, size=None):
        return rng.beta(self.a, self.b, size)

    def to_dict(self):
        return {"beta": [self.a, self.b]}


@dataclass(frozen=True)
class Gamma:
    """Gamma with ``shape`` and ``scale``; mean is ``shape * scale``."""

    shape: float
    scale: float

    def __post_init__(self):
        _positive("Gamma shape", self.shape)
        _positive("Gamma scale", self.scale)

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def var(self):
        return self.shape * self.scale**2

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def to_dict(self):
        return {"gamma": [self.shape, self.scale]}


@dataclass(frozen=True)
class Dirichlet:
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if not self.alpha:
            raise ValueError("Dirichlet needs at least one concentration parameter")
        for a in self.alpha:
            _positive("Dirichlet concentration", a)

    def __len__(self):
        return len(self.alpha)

    @property
    def mean(self):
        a = np.asarray(self.alpha)
        return a / a.sum()

    @property
    def var(self):
        a = np.asarray(self.alpha)
        a0 = a.sum()
        m = a / a0
        return m * (1 - m) / (a0 + 1)

    def sample(self, rng, size=None):
        if len(self.alpha) == 1:
            shape = (1,) if size is None else (*np.atleast_1d(size), 1)
            return np.ones(shape)
        x = rng.dirichlet(self.alpha, size)
        # renormalise: numpy's gamma-ratio construction can drift in the last ulp
        return x / x.sum(axis=-1, keepdims=True)

    def to_dict(self):
        return {"dirichlet": list(self.alpha)}


@dataclass(frozen=True)
class Poisson:
    rate: float

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"Poisson rate must be >= 0, got {self.rate!r}")

    @property
    def mean(self):
        return self.rate

    @property
    def var(self):
        return self.rate

    def sample(self, rng, size=None):
        return rng.poisson(self.rate, size)

    def to_dict(self):
        return {"poisson": self.rate}


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.lo > self.hi:
            raise ValueError(f"Uniform needs finite lo <= hi, got ({self.lo!r}, {self.hi!r})")

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def var(self):
        return (self.hi - self.lo) ** 2 / 12.0

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def to_dict(self):
        return {"uniform": [self.lo, self.hi]}


@dataclass(frozen=True)
class PointMass:
    value: Any

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"PointMass value must be finite, got {self.value!r}")
        if v.ndim:
            object.__setattr__(self, "value", tuple(v.tolist()))
        else:
            object.__setattr__(self, "value", float(v))

    @property
    def mean(self):
        return np.asarray(self.value) if isinstance(self.value, tuple) else self.value

    @property
    def var(self):
        return np.zeros(len(self.value)) if isinstance(self.value, tuple) else 0.0

    def __len__(self):
        return len(self.value) if isinstance(self.value, tuple) else 1

    def sample(self, rng, size=None):
        v = np.asarray(self.value, dtype=float)
        if size is None:
            return v.copy() if v.ndim else float(v)
        return np.broadcast_to(v, (*np.atleast_1d(size), *v.shape)).copy()

    def to_dict(self):
        return {"point": list(self.value) if isinstance(self.value, tuple) else self.value}


DistSpec = Union[Beta, Gamma, Dirichlet, Poisson, Uniform, PointMass]

_FAMILIES = {
    "beta": lambda p: Beta(*p),
    "gamma": lambda p: Gamma(*p),
    "dirichlet": lambda p: Dirichlet(tuple(p)),
    "poisson": lambda p: Poisson(p),
    "uniform": lambda p: Uniform(*p),
    "point": lambda p: PointMass(p),
}


def dist_from_dict(d) -> DistSpec:
    """Parse ``{"beta": [27, 3]}``-style mappings (one key, the family name)."""
    if not isinstance(d, dict) or len(d) != 1:
        raise ValueError(f"distribution must be a one-key mapping like {{beta: [a, b]}}, got {d!r}")
    (family, params), = d.items()
    try:
        make = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown distribution family {family!r}") from None
    try:
        return make(params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {family}: {params!r}") from exc


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool) and label >= 0:
        text = f"i:{int(label)}"
    else:
        text = f"s:{label}"
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """A seed plus a hierarchical path; identical (seed, path) => identical draws."""

    seed: int
    path: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)
        object.__setattr__(self, "path", tuple(self.path))

    def child(self, *labels) -> "RngStream":
        return RngStream(self.seed, self.path + labels)

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(_label_key(p) for p in self.path))
        return np.random.Generator(np.random.Philox(ss))


def sample(d: DistSpec, s: RngStream, size=None):
    """One draw (or ``size`` draws) of ``d`` from the stream ``s``."""
    return d.sample(s.generator(), size)


def categorical(rng, weights):
    """Vectorised inverse-CDF categorical draw; ``weights`` is (n, K) or (K,)."""
    w = np.asarray(weights, dtype=float)
    cdf = np.cumsum(w, axis=-1)
    cdf /= cdf[..., -1:]
    u = rng.random(w.shape[:-1])
    idx = (cdf < u[..., None]).sum(axis=-1)
    return np.minimum(idx, w.shape[-1] - 1)


def sample_multinomial_entry(weights, s: RngStream) -> int:
    """Pick an entry-combination index with probabilities ``weights``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-9):
        raise ValueError("weights must be a probability vector")
    return int(categorical(s.generator(), w))


def generic_vs_targeted_entry(generic_prob: DistSpec, n_entries: int, s: RngStream, size=None):
    """Weights over ``[all entries, entry_1, ..., entry_n]``.

    ``g`` is drawn from ``generic_prob`` and given to the combination hitting
    every entry block; the remainder is split evenly over the single entries.
    """
    if n_entries < 1:
        raise ValueError("n_entries must be >= 1")
    g = np.asarray(generic_prob.sample(s.generator(), size), dtype=float)
    rest = np.repeat(((1.0 - g) / n_entries)[..., None], n_entries, axis=-1)
    return np.concatenate([g[..., None], rest], axis=-1)
