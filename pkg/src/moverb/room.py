"""Shoebox-room image-source lattice.

A rectangular room with planar walls turns one point source into a lattice
of mirrored copies. Along each axis the mirror sequence is indexed by a
signed integer j: the mirrored coordinate is 2*n*L + (-1 if odd else +1)*x
with j = 2*n - parity, and |j| counts the reflections on that axis. The
combined amplitude factor of an image is the product of per-wall reflection
coefficients raised to the number of hits on that wall.

Everything here is an immutable value; all operations are pure functions.
"""

from dataclasses import dataclass

import numpy as np


def _vec3(v, name):
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True)
class Room:
    """Shoebox geometry with per-wall amplitude reflection coefficients.

    dims: (Lx, Ly, Lz) in meters, all strictly positive.
    wall_reflection: 6 values in (0, 1] ordered (-x, +x, -y, +y, -z, +z).
    """

    dims: np.ndarray
    wall_reflection: np.ndarray

    def __post_init__(self):
        dims = _vec3(self.dims, "dims")
        walls = np.asarray(self.wall_reflection, dtype=np.float64)
        if walls.shape == ():
            walls = np.full(6, float(walls))
        if walls.shape != (6,):
            raise ValueError("wall_reflection needs 6 values (or one scalar)")
        if not np.all(dims > 0):
            raise ValueError("room dims must be strictly positive")
        if not (np.all(walls > 0) and np.all(walls <= 1)):
            raise ValueError("wall reflections must lie in (0, 1]")
        dims.flags.writeable = False
        walls.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "wall_reflection", walls)

    def contains(self, pos, margin=0.0):
        p = np.asarray(pos, dtype=np.float64)
        return bool(np.all(p > margin) and np.all(p < self.dims - margin))


@dataclass(frozen=True)
class MicPosition:
    """Receiver location, strictly inside the room when used."""

    pos: np.ndarray

    def __post_init__(self):
        p = _vec3(self.pos, "mic pos")
        p.flags.writeable = False
        object.__setattr__(self, "pos", p)

    def require_inside(self, room):
        if not room.contains(self.pos):
            raise ValueError("mic position must be strictly inside the room")


def as_mic(value):
    """Coerce a bare coordinate triple to MicPosition."""
    if isinstance(value, MicPosition):
        return value
    return MicPosition(pos=np.asarray(value, dtype=np.float64))


@dataclass(frozen=True, order=True)
class ImageSourceSpec:
    """One mirrored source.

    lattice: per-axis integer n, parity: per-axis coordinate flip, beta:
    combined reflection attenuation in (0, 1], order: total reflection count.
    Field order makes tuple comparison follow the canonical enumeration
    order (ascending order, then lexicographic lattice, then parity).
    """

    order: int
    lattice: tuple
    parity: tuple
    beta: float


def _axis_reflections(j):
    # Walls hit along one axis for signed mirror index j: a ray reaching
    # unfolded cell j crosses |j| wall planes, alternating starting with the
    # wall on the side j points to.
    if j >= 0:
        return j // 2, (j + 1) // 2  # (minus-wall hits, plus-wall hits)
    a = -j
    return (a + 1) // 2, a // 2


def enumerate_images(room, max_order):
    """All images with total reflection order <= max_order, each once.

    Ordering is deterministic: ascending order, then lexicographic lattice,
    then parity. max_order = 0 yields exactly the direct source.
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    walls = room.wall_reflection
    specs = []
    rng = range(-max_order, max_order + 1)
    for jx in rng:
        rem_x = max_order - abs(jx)
        for jy in range(-rem_x, rem_x + 1):
            rem_y = rem_x - abs(jy)
            for jz in range(-rem_y, rem_y + 1):
                js = (jx, jy, jz)
                beta = 1.0
                lattice = []
                parity = []
                for k, j in enumerate(js):
                    q = j % 2
                    lattice.append((j + q) // 2)
                    parity.append(bool(q))
                    h_minus, h_plus = _axis_reflections(j)
                    beta *= walls[2 * k] ** h_minus * walls[2 * k + 1] ** h_plus
                specs.append(
                    ImageSourceSpec(
                        order=abs(jx) + abs(jy) + abs(jz),
                        lattice=tuple(lattice),
                        parity=tuple(parity),
                        beta=float(beta),
                    )
                )
    specs.sort()
    return specs


def image_position(spec, source_pos, room):
    """Mirrored source location for a given physical source position.

    Affine in source_pos: result[k] = 2*lattice[k]*dims[k] +- source_pos[k]
    (minus where parity flips the axis). A moving source therefore induces
    a moving image with the same temporal bandwidth.
    """
    src = np.asarray(source_pos, dtype=np.float64)
    lat = np.asarray(spec.lattice, dtype=np.float64)
    flip = np.where(np.asarray(spec.parity), -1.0, 1.0)
    return 2.0 * lat * room.dims + flip * src


def image_distance(spec, source_pos, mic, room):
    """Euclidean distance from the image of source_pos to the mic.

    Raw value; a coincident image yields 0.0 and is clamped downstream by
    the synthesis distance floor, not here.
    """
    return float(np.linalg.norm(image_position(spec, source_pos, room) - mic.pos))


def attenuation(beta, distance):
    """Spherical-spreading amplitude beta / (4 pi d)."""
    if distance <= 0:
        raise ValueError("attenuation requires distance > 0 (clamp first)")
    return beta / (4.0 * np.pi * distance)


def as_arrays(specs, room):
    """Pack specs into arrays for the vectorized kernels.

    Returns (offset, sign, beta, order): offset (S,3) = 2*lattice*dims,
    sign (S,3) in {-1,+1}, beta (S,), order (S,) int64, in list order.
    """
    lat = np.array([s.lattice for s in specs], dtype=np.float64).reshape(-1, 3)
    par = np.array([s.parity for s in specs], dtype=bool).reshape(-1, 3)
    offset = 2.0 * lat * room.dims
    sign = np.where(par, -1.0, 1.0)
    beta = np.array([s.beta for s in specs], dtype=np.float64)
    order = np.array([s.order for s in specs], dtype=np.int64)
    return offset, sign, beta, order


def estimate_image_count(room, t60, c=343.0):
    """Number of images within acoustic reach c * t60, for budgeting.

    Uses the nominal source/mic placement at the room center, where the
    image lattice bijects onto integer triples m with path length
    sqrt(sum (m_k * L_k)^2); the result is the exact count of lattice
    points inside that ball (roughly (4 pi / 3) (c t60)^3 / volume).
    Intended for cost estimates, not for enumeration.
    """
    if t60 <= 0:
        raise ValueError("t60 must be > 0")
    radius = c * t60
    lx, ly, lz = (float(d) for d in room.dims)
    r2 = radius * radius
    mx = np.arange(-int(radius // lx), int(radius // lx) + 1)
    my = np.arange(-int(radius // ly), int(radius // ly) + 1)
    rem = r2 - (mx[:, None] * lx) ** 2 - (my[None, :] * ly) ** 2
    rem = np.maximum(rem, -1.0)
    nz = np.floor(np.sqrt(np.maximum(rem, 0.0)) / lz)
    counts = np.where(rem >= 0.0, 2.0 * nz + 1.0, 0.0)
    return int(counts.sum())
