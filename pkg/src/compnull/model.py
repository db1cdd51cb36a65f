"""Null families, the false-null distribution and the random mixture sampler."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import special_fns as sf

REGIONS = ("lower", "upper", "absolute")


@dataclass(frozen=True)
class DistributionSpec:
    """A univariate continuous distribution: ``normal(mu, sigma)`` or ``noncentral_t(df, delta)``."""

    kind: str
    params: tuple[float, float]

    def __post_init__(self):
        if self.kind == "normal":
            if not self.params[1] > 0:
                raise ValueError(f"normal sigma must be positive, got {self.params[1]}")
        elif self.kind == "noncentral_t":
            if not self.params[0] > 0:
                raise ValueError(f"noncentral_t df must be positive, got {self.params[0]}")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        object.__setattr__(self, "params", (float(self.params[0]), float(self.params[1])))

    @classmethod
    def normal(cls, mu: float, sigma: float = 1.0) -> "DistributionSpec":
        return cls("normal", (mu, sigma))

    @classmethod
    def noncentral_t(cls, df: float, delta: float) -> "DistributionSpec":
        return cls("noncentral_t", (df, delta))

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            mu, sigma = self.params
            return sf.std_normal_cdf_array((x - mu) / sigma)
        return sf.noncentral_t_cdf_array(x.ravel(), *self.params).reshape(x.shape)

    def sf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            mu, sigma = self.params
            return sf.std_normal_cdf_array((mu - x) / sigma)
        return sf.noncentral_t_sf_array(x.ravel(), *self.params).reshape(x.shape)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            mu, sigma = self.params
            return sf.std_normal_pdf_array((x - mu) / sigma) / sigma
        return sf.noncentral_t_pdf_array(x.ravel(), *self.params).reshape(x.shape)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "normal":
            mu, sigma = self.params
            return mu + sigma * rng.standard_normal(size)
        df, delta = self.params
        z = rng.standard_normal(size)
        v = rng.chisquare(df, size)
        return (z + delta) / np.sqrt(v / df)

    def describe(self) -> str:
        if self.kind == "normal":
            return f"N({self.params[0]:g},{self.params[1]:g})"
        return f"t({self.params[0]:g},{self.params[1]:g})"


def s_transform(x, region: str) -> np.ndarray:
    """Map raw observations to the statistic indexing the nested rejection regions."""
    x = np.asarray(x, dtype=float)
    if region == "lower":
        return x.copy()
    if region == "upper":
        return -x
    if region == "absolute":
        return np.abs(x)
    raise ValueError(f"unknown region {region!r}")


def region_cdf(dist: DistributionSpec, t, region: str) -> np.ndarray:
    """Probability that ``dist`` puts on the region indexed by ``t``."""
    t = np.asarray(t, dtype=float)
    if region == "lower":
        return dist.cdf(t)
    if region == "upper":
        return dist.sf(-t)
    if region == "absolute":
        if np.any(t < 0):
            raise ValueError("absolute region requires t >= 0")
        return np.clip(dist.cdf(t) - dist.cdf(-t), 0.0, 1.0)
    raise ValueError(f"unknown region {region!r}")


def region_pdf(dist: DistributionSpec, t, region: str) -> np.ndarray:
    """Density of the s-statistic of an observation drawn from ``dist``."""
    t = np.asarray(t, dtype=float)
    if region == "lower":
        return dist.pdf(t)
    if region == "upper":
        return dist.pdf(-t)
    if region == "absolute":
        return np.where(t >= 0, dist.pdf(t) + dist.pdf(-t), 0.0)
    raise ValueError(f"unknown region {region!r}")


@dataclass(frozen=True)
class NullFamily:
    components: tuple[DistributionSpec, ...]
    region: str = "lower"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) < 1:
            raise ValueError("a null family needs at least one component")
        if self.region not in REGIONS:
            raise ValueError(f"region must be one of {REGIONS}, got {self.region!r}")

    @property
    def size(self) -> int:
        return len(self.components)

    def cdf_matrix(self, t) -> np.ndarray:
        """Return an array of shape ``t.shape + (L,)`` of component region probabilities."""
        t = np.asarray(t, dtype=float)
        return np.stack([region_cdf(d, t, self.region) for d in self.components], axis=-1)

    def pdf_matrix(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.stack([region_pdf(d, t, self.region) for d in self.components], axis=-1)


def cdf_vector(family: NullFamily, t: float) -> np.ndarray:
    """phi(t): the L component probabilities of the region indexed by t."""
    if not np.isfinite(t):
        if t < 0 and family.region != "absolute":
            return np.zeros(family.size)
        if t > 0:
            return np.ones(family.size)
    return family.cdf_matrix(np.array([t]))[0]


@dataclass(frozen=True)
class Prior:
    nu: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        if nu.ndim != 1 or nu.size == 0:
            raise ValueError("prior must be a nonempty vector")
        if np.any(nu < 0):
            raise ValueError("prior weights must be nonnegative")
        if abs(nu.sum() - 1.0) > 1e-12:
            raise ValueError(f"prior weights must sum to 1, got {nu.sum()!r}")
        nu.setflags(write=False)
        object.__setattr__(self, "nu", nu)

    def __eq__(self, other):
        return isinstance(other, Prior) and np.array_equal(self.nu, other.nu)

    def __hash__(self):
        return hash(tuple(self.nu))


@dataclass(frozen=True)
class MixtureModel:
    family: NullFamily
    prior: Prior
    a: float
    alt: DistributionSpec

    def __post_init__(self):
        # a = 0 (no false nulls) is allowed for calibration runs.
        if not 0.0 <= self.a < 1.0:
            raise ValueError(f"false-null fraction a must lie in [0, 1), got {self.a}")
        if self.prior.nu.size != self.family.size:
            raise ValueError("prior length does not match the number of null components")
        if self.alt in self.family.components:
            raise ValueError("false-null distribution must not be a member of the null family")

    def s_cdf(self, t) -> np.ndarray:
        """Distribution function Q of the s-statistic under the full mixture."""
        t = np.asarray(t, dtype=float)
        null_part = self.family.cdf_matrix(t) @ self.prior.nu
        return (1.0 - self.a) * null_part + self.a * region_cdf(self.alt, t, self.family.region)


@dataclass(frozen=True)
class LabeledSample:
    """Sorted s-domain observations with hidden labels.

    ``labels[i]`` is True when observation i came from a null component.
    ``component[i]`` is the generating component index, or -1 for the
    false-null distribution.
    """

    x: np.ndarray
    labels: np.ndarray
    component: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        labels = np.asarray(self.labels, dtype=bool)
        if x.ndim != 1 or labels.shape != x.shape:
            raise ValueError("x and labels must be 1-D and of equal length")
        if x.size > 1 and np.any(np.diff(x) < 0):
            raise ValueError("x must be sorted nondecreasing")
        comp = self.component
        comp = np.full(x.size, -2, dtype=int) if comp is None else np.asarray(comp, dtype=int)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "component", comp)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def n_true_null(self) -> int:
        return int(self.labels.sum())

    @classmethod
    def from_values(cls, values: Sequence[float], region: str = "lower") -> "LabeledSample":
        """Unlabeled data (e.g. read from a file); all labels are marked True."""
        s = np.sort(s_transform(values, region), kind="stable")
        return cls(s, np.ones(s.size, dtype=bool))


def repetition_rng(seed: int, rep: int = 0) -> np.random.Generator:
    """Counter-based generator keyed on (seed, repetition index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(rep)])))


def sample_mixture(model: MixtureModel, n: int, seed: int, rep: int = 0) -> LabeledSample:
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = repetition_rng(seed, rep)
    L = model.family.size
    probs = np.append((1.0 - model.a) * model.prior.nu, model.a)
    probs = probs / probs.sum()
    which = rng.choice(L + 1, size=n, p=probs)
    raw = np.empty(n)
    for k in range(L + 1):
        idx = np.flatnonzero(which == k)
        if idx.size:
            dist = model.alt if k == L else model.family.components[k]
            raw[idx] = dist.sample(rng, idx.size)
    s = s_transform(raw, model.family.region)
    order = np.argsort(s, kind="stable")
    comp = np.where(which == L, -1, which)[order]
    return LabeledSample(s[order], which[order] != L, comp)


_TABLE1_NULL_MEANS = {
    1: ((0.0, 1.0), (-1.0, 1.0), (-2.0, 1.0)),
    3: ((0.0, 1.0), (-1.0, 1.0), (-2.0, 1.0)),
    4: ((0.0, 1.0), (-1.0, 1.5), (-2.0, 1.5)),
    5: ((0.0, 1.0), (-1.0, 1.0), (-2.0, 1.0), (-3.0, 1.0), (-4.0, 1.0)),
}
_TABLE1_PRIORS = {
    1: (0.75, 0.15, 0.10),
    2: (0.75, 0.15, 0.10),
    3: (0.60, 0.25, 0.15),
    4: (0.75, 0.15, 0.10),
    5: (0.65, 0.15, 0.10, 0.05, 0.05),
}
PRESET_A = 0.05


def table1_preset(preset_id: int) -> MixtureModel:
    """The five simulation settings (lower-tail regions, a = 0.05)."""
    if preset_id not in _TABLE1_PRIORS:
        raise ValueError(f"unknown preset {preset_id!r}; expected 1..5")
    if preset_id == 2:
        nulls = [DistributionSpec.noncentral_t(20, d) for d in (0.0, -1.0, -2.0)]
        alt = DistributionSpec.noncentral_t(20, -4.0)
    else:
        nulls = [DistributionSpec.normal(m, s) for m, s in _TABLE1_NULL_MEANS[preset_id]]
        alt = DistributionSpec.normal(-5.0 if preset_id == 5 else -4.0, 1.0)
    nu = np.array(_TABLE1_PRIORS[preset_id])
    return MixtureModel(NullFamily(tuple(nulls), "lower"), Prior(nu / nu.sum()), PRESET_A, alt)
