"""Exact nearest-neighbour search over the complete tuples.

Distances are the root mean squared difference over the chosen attributes.
Ties in distance are always resolved towards the smaller tuple index, so
every neighbour list is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CHUNK = 256


def distance(a, b, f_size: int | None = None) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if f_size is None:
        f_size = a.shape[-1]
    return float(np.sqrt(np.sum((a - b) ** 2) / f_size))


def _row_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((points - query) ** 2, axis=1) / points.shape[1])


def nn(points, query, k: int, exclude_self: int | None = None):
    """The ``k`` nearest rows of ``points`` to ``query``.

    Returns ``(indices, distances, truncated)``; ``truncated`` is True when
    fewer than ``k`` rows were available.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    points = np.asarray(points, dtype=np.float64)
    query = np.asarray(query, dtype=np.float64)
    d = _row_distances(points, query)
    order = np.argsort(d, kind="stable")
    if exclude_self is not None:
        order = order[order != exclude_self]
    truncated = k > order.shape[0]
    order = order[:k]
    return order, d[order], truncated


def standardizer(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and scale for z-scoring; constant columns keep scale 1."""
    mean = points.mean(axis=0)
    std = points.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


@dataclass(frozen=True, eq=False)
class NeighborIndex:
    """Full distance-sorted neighbour lists for every complete tuple.

    ``order[i]`` starts with ``i`` itself, followed by the other tuples by
    ascending distance. A prefix of length ``ell`` is therefore the learning
    neighbourhood of size ``ell``, and ``order[i, 1:k+1]`` the validation
    neighbourhood that leaves ``i`` out.
    """

    attribute_set: tuple[int, ...]
    points: np.ndarray
    order: np.ndarray
    distances: np.ndarray
    center: np.ndarray | None = None
    scale: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def _prepare(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.scale is not None:
            x = (x - self.center) / self.scale
        return x

    def learning_neighbors(self, i: int, ell: int) -> np.ndarray:
        return self.order[i, :ell]

    def validation_neighbors(self, j: int, k: int) -> np.ndarray:
        return self.order[j, 1 : k + 1]

    def query(self, x, k: int) -> np.ndarray:
        """Neighbours of an arbitrary tuple given its values on the attribute set."""
        idx, _, _ = nn(self.points, self._prepare(x), k)
        return idx


def build_index(r_f, attribute_set=None, normalize: bool = False) -> NeighborIndex:
    """Precompute neighbour orderings for the rows of ``r_f``.

    ``r_f`` holds the complete tuples projected on the attribute set. With
    ``normalize`` the columns are z-scored before distances are taken.
    """
    r_f = np.asarray(r_f, dtype=np.float64)
    if r_f.ndim != 2 or r_f.shape[0] < 1 or r_f.shape[1] < 1:
        raise ValueError("need a non-empty 2-D array of complete tuples")
    if attribute_set is None:
        attribute_set = tuple(range(r_f.shape[1]))
    center = scale = None
    points = r_f
    if normalize:
        center, scale = standardizer(r_f)
        points = (r_f - center) / scale
    points = np.ascontiguousarray(points)
    n, f = points.shape
    order = np.empty((n, n), dtype=np.intp)
    dist = np.empty((n, n))
    for start in range(0, n, _CHUNK):
        block = points[start : start + _CHUNK]
        d = np.sqrt(np.sum((block[:, None, :] - points[None, :, :]) ** 2, axis=2) / f)
        for off, row in enumerate(d):
            i = start + off
            o = np.argsort(row, kind="stable")
            # self goes first even when an exact duplicate has a lower index
            pos = int(np.flatnonzero(o == i)[0])
            if pos:
                o[1 : pos + 1] = o[:pos]
                o[0] = i
            order[i] = o
            dist[i] = row[o]
    for a in (points, order, dist):
        a.setflags(write=False)
    return NeighborIndex(tuple(attribute_set), points, order, dist, center, scale)
