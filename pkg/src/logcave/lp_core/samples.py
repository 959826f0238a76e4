"""The immutable point set every other module works on."""

from dataclasses import dataclass
from functools import cached_property
from math import gamma, pi

import numpy as np

from ..errors import DegenerateSampleSet, PreconditionError

__all__ = ["SampleSet", "ball_volume"]


def ball_volume(d, r=1.0):
    return pi ** (d / 2) / gamma(d / 2 + 1) * r ** d


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Points ``X_1..X_n`` in R^d stored as the columns of a ``d x n`` matrix.

    Construction validates that there are no repeated points and that the
    points affinely span R^d, so the convex hull is full-dimensional.
    A 1-d array is read as ``n`` points on the line.
    """

    points: np.ndarray

    def __post_init__(self):
        X = np.array(self.points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.size == 0:
            raise PreconditionError("points must be a non-empty d x n matrix")
        if not np.all(np.isfinite(X)):
            raise PreconditionError("points must be finite")
        d, n = X.shape
        if len(np.unique(X.T, axis=0)) != n:
            raise DegenerateSampleSet("sample contains repeated points", rank=None)
        rank = int(np.linalg.matrix_rank(X - X[:, :1])) if n > 1 else 0
        if rank < d:
            raise DegenerateSampleSet(
                f"points span an affine subspace of dimension {rank} < {d}", rank=rank)
        X.setflags(write=False)
        object.__setattr__(self, "points", X)

    @classmethod
    def from_rows(cls, rows):
        """Build from an ``n x d`` array (one point per row)."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1)
        return cls(rows.T)

    @property
    def d(self):
        return self.points.shape[0]

    @property
    def n(self):
        return self.points.shape[1]

    def column(self, i):
        return self.points[:, i]

    @cached_property
    def augmented(self):
        """``[X; 1^T]``, the equality block of the tent LP."""
        A = np.vstack([self.points, np.ones(self.n)])
        return np.ascontiguousarray(A)

    @cached_property
    def bounding_box(self):
        return self.points.min(axis=1), self.points.max(axis=1)

    @cached_property
    def outer_ball(self):
        c = self.points.mean(axis=1)
        r = float(np.linalg.norm(self.points - c[:, None], axis=0).max())
        return c, r

    @cached_property
    def inner_simplex(self):
        """Indices of d+1 affinely independent poles, picked greedily for volume."""
        X = self.points
        c = X.mean(axis=1)
        chosen = [int(np.argmax(np.linalg.norm(X - c[:, None], axis=0)))]
        for _ in range(self.d):
            base = X[:, chosen[0]]
            D = X[:, chosen[1:]] - base[:, None]
            R = X - base[:, None]
            if D.shape[1]:
                coef, *_ = np.linalg.lstsq(D, R, rcond=None)
                R = R - D @ coef
            dist = np.linalg.norm(R, axis=0)
            dist[chosen] = -1.0
            chosen.append(int(np.argmax(dist)))
        return tuple(chosen)

    @cached_property
    def inner_ball(self):
        """A ball contained in the hull: the insphere of :attr:`inner_simplex`."""
        V = self.points[:, list(self.inner_simplex)]
        d = self.d
        B = np.vstack([V, np.ones(d + 1)])
        Binv = np.linalg.inv(B)
        # barycentric coordinate k is Binv[k, :d] @ x + Binv[k, d]
        norms = np.linalg.norm(Binv[:, :d], axis=1)
        r = 1.0 / norms.sum()
        lam = norms * r
        return V @ lam, float(r)

    def __repr__(self):
        return f"SampleSet(n={self.n}, d={self.d})"
