"""Closed cones in phase space, represented by finite sets of unit directions."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .symplectic import Subspace

# Slack used in every angular comparison so that directions sitting exactly
# one grid step apart compare as "within one step".
ANGLE_SLACK = 1e-9


def angles_between(u, v) -> np.ndarray:
    """Pairwise angles (radians) between the unit rows of ``u`` and ``v``.

    Uses 2 atan2(|u - v|, |u + v|), which stays accurate near 0 and pi where
    arccos of the dot product loses half the digits.
    """
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    diff = np.linalg.norm(u[:, None, :] - v[None, :, :], axis=2)
    summ = np.linalg.norm(u[:, None, :] + v[None, :, :], axis=2)
    return 2.0 * np.arctan2(diff, summ)


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    v = np.atleast_2d(np.asarray(v, dtype=float))
    nrm = np.linalg.norm(v, axis=1)
    if np.any(nrm == 0) or not np.all(np.isfinite(nrm)):
        raise ValueError("direction vectors must be non-zero and finite")
    out = v / nrm[:, None]
    out[np.abs(out) < 1e-15] = 0.0
    return out / np.linalg.norm(out, axis=1)[:, None]


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Finite set of unit vectors in R^{2d} standing for a closed cone.

    Construction normalizes the rows and drops near-duplicates (closer than
    half the angular resolution), keeping the first occurrence.
    """

    dirs: np.ndarray
    angular_resolution: float

    def __post_init__(self):
        dirs = np.asarray(self.dirs, dtype=float)
        if dirs.ndim != 2:
            raise ValueError("dirs must be a 2-D array (n, 2d)")
        if dirs.shape[1] % 2:
            raise ValueError("directions must live in an even-dimensional phase space")
        if self.angular_resolution <= 0:
            raise ValueError("angular_resolution must be positive")
        if len(dirs):
            dirs = _normalize_rows(dirs)
            keep = []
            for i in range(len(dirs)):
                if keep and np.min(angles_between(dirs[i], dirs[keep])) < 0.5 * self.angular_resolution:
                    continue
                keep.append(i)
            dirs = dirs[keep]
        dirs.setflags(write=False)
        object.__setattr__(self, "dirs", dirs)

    @classmethod
    def empty(cls, ambient: int, angular_resolution: float) -> "DirectionSet":
        return cls(np.zeros((0, ambient)), angular_resolution)

    @property
    def ambient(self) -> int:
        return self.dirs.shape[1]

    @property
    def dim_d(self) -> int:
        return self.ambient // 2

    def __len__(self) -> int:
        return len(self.dirs)

    def __iter__(self):
        return iter(self.dirs)

    def distance_to(self, v) -> np.ndarray:
        """Angular distance from each row of ``v`` to the nearest member (inf if empty)."""
        v = np.atleast_2d(v)
        if len(self) == 0:
            return np.full(len(v), np.inf)
        return np.min(angles_between(v, self.dirs), axis=1)

    def subset(self, mask) -> "DirectionSet":
        return DirectionSet(self.dirs[np.asarray(mask, dtype=bool)], self.angular_resolution)

    def union(self, other: "DirectionSet") -> "DirectionSet":
        return DirectionSet(np.vstack([self.dirs, other.dirs]), self.angular_resolution)

    def is_subset(self, other: "DirectionSet", tol: float | None = None) -> bool:
        tol = self.angular_resolution if tol is None else tol
        return bool(np.all(other.distance_to(self.dirs) <= tol + ANGLE_SLACK)) if len(self) else True

    def matches(self, other: "DirectionSet", tol: float | None = None) -> bool:
        """Equality up to ``tol`` (Hausdorff distance), default one resolution step."""
        return self.is_subset(other, tol) and other.is_subset(self, tol)

    def hausdorff(self, other: "DirectionSet") -> float:
        if len(self) == 0 and len(other) == 0:
            return 0.0
        if len(self) == 0 or len(other) == 0:
            return float("inf")
        return float(max(np.max(other.distance_to(self.dirs)), np.max(self.distance_to(other.dirs))))

    def in_subspace_cone(self, sub: Subspace, tol_angle: float | None = None) -> np.ndarray:
        """Mask of members whose distance to ``sub`` is at most sin(tol_angle)."""
        tol_angle = self.angular_resolution if tol_angle is None else tol_angle
        if len(self) == 0:
            return np.zeros(0, dtype=bool)
        if sub.dim == 0:
            return np.zeros(len(self), dtype=bool)
        return sub.distance(self.dirs) <= np.sin(tol_angle) + ANGLE_SLACK

    def restrict_to(self, sub: Subspace, tol_angle: float | None = None) -> "DirectionSet":
        return self.subset(self.in_subspace_cone(sub, tol_angle))

    def apply(self, matrix) -> "DirectionSet":
        """Image of the cone under a real linear map, renormalized."""
        if len(self) == 0:
            return self
        M = np.asarray(matrix)
        if np.iscomplexobj(M):
            M = M.real
        img = self.dirs @ M.T
        nrm = np.linalg.norm(img, axis=1)
        return DirectionSet(img[nrm > 1e-12], self.angular_resolution)

    def dilate(self, reference: "DirectionSet", steps: float = 1.0) -> "DirectionSet":
        """Members of ``reference`` within ``steps`` resolution steps of this set."""
        if len(self) == 0:
            return DirectionSet.empty(reference.ambient, reference.angular_resolution)
        dist = self.distance_to(reference.dirs)
        mask = dist <= steps * reference.angular_resolution + ANGLE_SLACK
        return reference.subset(mask)

    def to_list(self) -> list[list[float]]:
        return [[float(c) for c in v] for v in self.dirs]


def circle_directions(n: int = 64) -> DirectionSet:
    """``n`` equally spaced directions on S^1, starting at (1, 0)."""
    if n < 4 or n % 4:
        raise ValueError("number of circle directions must be a positive multiple of 4")
    ang = 2 * np.pi * np.arange(n) / n
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return DirectionSet(pts, 2 * np.pi / n)


@lru_cache(maxsize=8)
def _cube_surface(ambient: int, m: int) -> np.ndarray:
    ticks = np.linspace(-1.0, 1.0, m + 1)
    pts = [p for p in itertools.product(ticks, repeat=ambient) if np.max(np.abs(p)) == 1.0]
    return np.array(pts)


def cubed_sphere_directions(ambient: int = 4, m: int = 4) -> DirectionSet:
    """Radial projection of the lattice on the boundary of [-1, 1]^ambient.

    ``m`` subdivisions per edge; ``m = 4`` gives 544 directions on S^3 and
    contains every signed coordinate axis exactly.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    pts = _normalize_rows(_cube_surface(ambient, m))
    ang = angles_between(pts, pts)
    np.fill_diagonal(ang, np.inf)
    resolution = float(np.max(np.min(ang, axis=1)))
    return DirectionSet(pts, resolution)


def default_directions(d: int) -> DirectionSet:
    if d == 1:
        return circle_directions(64)
    if d == 2:
        return cubed_sphere_directions(4, 4)
    raise ValueError(f"only d in {{1, 2}} is supported, got {d}")
