"""Output-space labeling: boxed regions, letters, and epsilon-robust letter sets.

A letter is the set of atomic propositions whose (closed) box contains an
output point.  The epsilon-robust variant collects every letter attainable
somewhere in the closed Euclidean ball of radius ``eps`` around the point,
treating propositions independently.  This may over-approximate the joint
letter set of the ball, which is sound for the worst-case minimization in
the robust Bellman operator.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ._validation import as_vector, check_box

__all__ = ["Region", "RegionMap", "label", "possible_letters"]

# Per-proposition status codes used by the vectorized classifier.
_FALSE, _TRUE, _UNDECIDED = 0, 1, 2


@dataclass(frozen=True)
class Region:
    """A named axis-aligned closed box in output space."""

    name: str
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo, hi = check_box(self.lo, self.hi, name=f"region {self.name!r}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, y):
        return bool(np.all(y >= self.lo) and np.all(y <= self.hi))


@dataclass(frozen=True)
class RegionMap:
    """Labeled regions plus the working output-space box."""

    regions: tuple
    bounds_lo: np.ndarray
    bounds_hi: np.ndarray

    def __post_init__(self):
        regions = tuple(self.regions)
        names = [r.name for r in regions]
        if len(set(names)) != len(names):
            raise ValueError("proposition names must be unique")
        lo, hi = check_box(self.bounds_lo, self.bounds_hi, name="bounds")
        for r in regions:
            if r.lo.size != lo.size:
                raise ValueError(f"region {r.name!r} dimension differs from bounds")
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "bounds_lo", lo)
        object.__setattr__(self, "bounds_hi", hi)

    @property
    def propositions(self):
        return tuple(r.name for r in self.regions)

    @property
    def output_dim(self):
        return self.bounds_lo.size

    def classify(self, Y, eps):
        """Per-proposition status for a batch of output points.

        Returns an ``(N, len(regions))`` integer array with entries
        ``_TRUE`` (ball inside the box), ``_FALSE`` (ball misses the box),
        or ``_UNDECIDED`` (ball straddles the boundary).
        """
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        out = np.empty((Y.shape[0], len(self.regions)), dtype=np.int8)
        for j, reg in enumerate(self.regions):
            # Distance from the point to the box (0 inside).
            gap = np.maximum(reg.lo - Y, Y - reg.hi)
            dist = np.linalg.norm(np.clip(gap, 0.0, None), axis=1)
            # The ball lies inside the closed box iff every facet margin >= eps.
            margin = np.minimum(Y - reg.lo, reg.hi - Y).min(axis=1)
            status = np.full(Y.shape[0], _UNDECIDED, dtype=np.int8)
            status[dist > eps] = _FALSE
            status[margin >= eps] = _TRUE
            out[:, j] = status
        return out


def label(region_map: RegionMap, y) -> frozenset:
    """The letter at ``y``: all propositions whose closed box contains it."""
    y = as_vector(y, size=region_map.output_dim, name="y")
    return frozenset(r.name for r in region_map.regions if r.contains(y))


def letters_from_status(region_map: RegionMap, status) -> set:
    """Expand a per-proposition status row into the set of attainable letters."""
    base = {region_map.regions[j].name for j in range(len(status)) if status[j] == _TRUE}
    free = [region_map.regions[j].name for j in range(len(status)) if status[j] == _UNDECIDED]
    letters = set()
    for k in range(len(free) + 1):
        for extra in combinations(free, k):
            letters.add(frozenset(base | set(extra)))
    return letters


def possible_letters(region_map: RegionMap, y, eps) -> set:
    """All letters attainable within the closed ``eps``-ball around ``y``.

    Computed proposition-wise: a proposition is possibly true iff the ball
    intersects its box, and possibly false iff the ball is not contained in
    the box; undecided propositions branch into both outcomes.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    y = as_vector(y, size=region_map.output_dim, name="y")
    status = region_map.classify(y[None, :], float(eps))[0]
    return letters_from_status(region_map, status)
