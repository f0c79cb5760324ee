"""Constants, vector helpers and path geometry.

Everything is Gaussian-CGS: lengths in cm, charge in esu, fields in Gauss or
statvolt/cm, momenta in g cm/s. Conversion from user-facing units (Volt)
happens only at the CLI boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

CONSTANTS_VERSION = "CODATA-2018 (10 significant digits, Gaussian-CGS)"


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = 2.997924580e10  # cm/s
    hbar: float = 1.054571817e-27  # erg s
    e: float = 4.803204713e-10  # esu
    a0: float = 5.291772109e-9  # cm
    mu_N: float = 5.050783746e-24  # erg/Gauss
    volt_to_statvolt: float = 3.335640952e-3

    @property
    def hbar_c(self) -> float:
        return self.hbar * self.c

    @property
    def hydrogen_dz(self) -> float:
        """|d_z| of the 2s/2p dipole eigenstates, 3 e a0 (esu cm)."""
        return 3.0 * self.e * self.a0


CONST = PhysicalConstants()


def as_vec3(v, name: str = "vector") -> np.ndarray:
    """Return ``v`` as a read-only float64 array of shape (3,).

    Raises ValueError for wrong shape or non-finite components.
    """
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr}")
    arr.setflags(write=False)
    return arr


def triple_product(a, b, c) -> float:
    return float(np.dot(a, np.cross(b, c)))


@dataclass(frozen=True)
class Trajectory:
    """Polyline path of the dipole's centre of mass.

    For a closed trajectory the first vertex is *not* repeated at the end;
    the closing segment is implied.
    """

    vertices: np.ndarray
    closed: bool = False
    _lengths: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValueError("vertices must be an (n, 3) array")
        if len(verts) < 2:
            raise ValueError("a trajectory needs at least 2 vertices")
        if not np.all(np.isfinite(verts)):
            raise ValueError("trajectory vertices must be finite")
        if self.closed and len(verts) > 2 and np.array_equal(verts[0], verts[-1]):
            raise ValueError("closed trajectory must not repeat its first vertex")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        starts, ends = self._segment_arrays(verts, self.closed)
        lengths = np.linalg.norm(ends - starts, axis=1)
        if np.any(lengths == 0.0):
            raise ValueError("trajectory has a degenerate (zero-length) segment")
        object.__setattr__(self, "_lengths", lengths)

    @staticmethod
    def _segment_arrays(verts, closed):
        if closed:
            return verts, np.roll(verts, -1, axis=0)
        return verts[:-1], verts[1:]

    @classmethod
    def line(cls, start, end) -> "Trajectory":
        return cls(np.array([as_vec3(start), as_vec3(end)]))

    @classmethod
    def rectangle_yz(cls, x, y_lo, y_hi, z_lo, z_hi) -> "Trajectory":
        """Counter-clockwise (seen from +x) closed rectangle in a plane x = const."""
        return cls(
            np.array(
                [
                    [x, y_lo, z_lo],
                    [x, y_hi, z_lo],
                    [x, y_hi, z_hi],
                    [x, y_lo, z_hi],
                ]
            ),
            closed=True,
        )

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """(starts, ends), each of shape (n_segments, 3)."""
        return self._segment_arrays(self.vertices, self.closed)

    @property
    def length(self) -> float:
        return float(np.sum(self._lengths))

    @property
    def start(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.vertices[0] if self.closed else self.vertices[-1]

    def reversed(self) -> "Trajectory":
        if self.closed:
            verts = np.concatenate([self.vertices[:1], self.vertices[:0:-1]])
        else:
            verts = self.vertices[::-1]
        return Trajectory(verts, closed=self.closed)


def segment_sample(traj: Trajectory, n_per_segment: int):
    """Midpoint-rule samples of a trajectory.

    Each segment is cut into ``n_per_segment`` equal pieces. Returns
    ``(points, dl)``, both (n_segments * n_per_segment, 3) arrays, where
    ``dl`` is the directed length element attached to each midpoint.
    """
    if int(n_per_segment) != n_per_segment or n_per_segment < 1:
        raise ValueError("n_per_segment must be a positive integer")
    n = int(n_per_segment)
    starts, ends = traj.segments()
    frac = (np.arange(n) + 0.5) / n
    delta = ends - starts
    points = starts[:, None, :] + frac[None, :, None] * delta[:, None, :]
    dl = np.repeat(delta / n, n, axis=0)
    return points.reshape(-1, 3), dl


DEFAULT_CONSTANTS = MappingProxyType(
    {
        "c": CONST.c,
        "hbar": CONST.hbar,
        "e": CONST.e,
        "a0": CONST.a0,
        "mu_N": CONST.mu_N,
        "volt_to_statvolt": CONST.volt_to_statvolt,
    }
)
