"""Half-space grid, slip-wall ghost closures, mode split, and snapshots.

Cells are centered: x1_i = (i + 1/2)*dx1 on (0, L), with two ghost layers
past each x1 end. The transverse directions discretize the unit torus with
periodic wrap handled by array rolls, so no ghosts are carried there and
the cell weights h2*h3 sum to exactly one.

Wall closures mirror cells across the x1 = 0 face: density extends evenly,
normal momentum oddly (impermeable wall), and tangential momentum follows
the slip relation u_t = k * du_t/dx1 written through the face value, which
gives ghost = interior * (2k - d)/(2k + d) at mirror distance d. The far
end pins both ghost layers to the exact downstream state.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gas import ShockConnection
from .profile import ProfileTable, profile_eval

SNAPSHOT_MAGIC = b"CNS3"
SNAPSHOT_VERSION = 1
NGHOST = 2


class MassTooLarge(ValueError):
    """Initial data leaves the admissible density window."""


class SnapshotError(ValueError):
    """Snapshot file missing, corrupt, or incompatible."""


@dataclass(frozen=True)
class HalfSpaceGrid:
    """Cell-centered grid on (0, L) x unit torus squared."""

    length: float
    n1: int
    n2: int
    n3: int
    dx1: float
    h2: float
    h3: float
    x1: np.ndarray = field(repr=False, compare=False)
    x1_padded: np.ndarray = field(repr=False, compare=False)
    x2: np.ndarray = field(repr=False, compare=False)
    x3: np.ndarray = field(repr=False, compare=False)

    @property
    def cell_volume(self) -> float:
        return self.dx1 * self.h2 * self.h3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n1, self.n2, self.n3)


def make_grid(length: float, n1: int, n2: int, n3: int) -> HalfSpaceGrid:
    """Build the grid; n1 >= 4 so the ghost depth fits, n2, n3 >= 1."""
    if not length > 0.0:
        raise ValueError(f"domain length must be positive, got {length}")
    if n1 < 4:
        raise ValueError(f"n1 must be at least 4, got {n1}")
    if n2 < 1 or n3 < 1:
        raise ValueError(f"n2, n3 must be at least 1, got {n2}, {n3}")
    dx1 = length / n1
    h2 = 1.0 / n2
    h3 = 1.0 / n3
    x1 = (np.arange(n1) + 0.5) * dx1
    x1_padded = (np.arange(n1 + 2 * NGHOST) - NGHOST + 0.5) * dx1
    x2 = (np.arange(n2) + 0.5) * h2
    x3 = (np.arange(n3) + 0.5) * h3
    return HalfSpaceGrid(
        length=length, n1=n1, n2=n2, n3=n3, dx1=dx1, h2=h2, h3=h3,
        x1=x1, x1_padded=x1_padded, x2=x2, x3=x3,
    )


@dataclass
class State:
    """Density and momentum on the padded grid, plus bookkeeping scalars.

    mass_outflow accumulates the far-face mass flux integral so global
    conservation can be audited per step.
    """

    grid: HalfSpaceGrid
    rho: np.ndarray
    m: np.ndarray
    t: float = 0.0
    mass_outflow: float = 0.0

    @classmethod
    def alloc(cls, grid: HalfSpaceGrid) -> "State":
        shape = (grid.n1 + 2 * NGHOST, grid.n2, grid.n3)
        return cls(grid=grid, rho=np.zeros(shape), m=np.zeros((3,) + shape))

    def copy(self) -> "State":
        return State(
            grid=self.grid, rho=self.rho.copy(), m=self.m.copy(),
            t=self.t, mass_outflow=self.mass_outflow,
        )

    @property
    def rho_int(self) -> np.ndarray:
        return self.rho[NGHOST:-NGHOST]

    @property
    def m_int(self) -> np.ndarray:
        return self.m[:, NGHOST:-NGHOST]


def navier_k_field(grid: HalfSpaceGrid, k_mean: float, k_amp: float) -> np.ndarray:
    """Slip length k(x') = k_mean + k_amp*sin(2 pi x2)*cos(2 pi x3), k > 0."""
    k = k_mean + k_amp * np.sin(2.0 * np.pi * grid.x2)[:, None] * np.cos(
        2.0 * np.pi * grid.x3
    )[None, :]
    k = np.broadcast_to(k, (grid.n2, grid.n3)).copy()
    if k_mean - abs(k_amp) <= 0.0:
        raise ValueError(
            f"slip length must stay positive: k_mean={k_mean}, k_amp={k_amp}"
        )
    return k


@dataclass(frozen=True)
class BoundarySpec:
    """Wall slip field and far-field Dirichlet values, with precomputed
    ghost factors for the two mirror distances dx1 and 3*dx1."""

    k_wall: np.ndarray
    far_rho: float
    far_m1: float
    fac_near: np.ndarray
    fac_deep: np.ndarray

    @classmethod
    def from_k(cls, grid: HalfSpaceGrid, k_wall: np.ndarray,
               far_rho: float, far_m1: float) -> "BoundarySpec":
        k2 = 2.0 * k_wall
        return cls(
            k_wall=k_wall,
            far_rho=far_rho,
            far_m1=far_m1,
            fac_near=(k2 - grid.dx1) / (k2 + grid.dx1),
            fac_deep=(k2 - 3.0 * grid.dx1) / (k2 + 3.0 * grid.dx1),
        )

    @classmethod
    def uniform(cls, grid: HalfSpaceGrid, k: float,
                far_rho: float, far_m1: float) -> "BoundarySpec":
        return cls.from_k(grid, np.full((grid.n2, grid.n3), float(k)), far_rho, far_m1)


def make_boundary(grid: HalfSpaceGrid, conn: ShockConnection,
                  k_mean: float, k_amp: float) -> BoundarySpec:
    """BoundarySpec with the sinusoidal slip field and downstream far state."""
    k = navier_k_field(grid, k_mean, k_amp)
    return BoundarySpec.from_k(
        grid, k, far_rho=conn.plus.rho, far_m1=conn.plus.rho * conn.plus.u1
    )


def apply_navier_bc(state: State, bc: BoundarySpec) -> None:
    """Fill all four ghost layers in place."""
    rho, m = state.rho, state.m
    # wall: even density, odd normal momentum
    rho[1] = rho[2]
    rho[0] = rho[3]
    m[0, 1] = -m[0, 2]
    m[0, 0] = -m[0, 3]
    # tangential slip closure; mirror densities are equal so the velocity
    # relation transfers directly to momentum
    for c in (1, 2):
        m[c, 1] = m[c, 2] * bc.fac_near
        m[c, 0] = m[c, 3] * bc.fac_deep
    # far end: Dirichlet to the downstream state
    rho[-2:] = bc.far_rho
    m[0, -2:] = bc.far_m1
    m[1, -2:] = 0.0
    m[2, -2:] = 0.0


def decompose_modes(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split f(..., x2, x3) into its transverse mean and the remainder.

    The mean uses the uniform torus weights, so the two parts are discretely
    orthogonal and the squared norms add up exactly.
    """
    zero = f.mean(axis=(-2, -1))
    nonzero = f - zero[..., None, None]
    return zero, nonzero


@dataclass(frozen=True)
class PerturbationSpec:
    """Initial-data perturbation: a compact zero-mode density bump with
    prescribed signed mass, and a seeded trigonometric tangential-velocity
    perturbation carrying only nonzero transverse modes."""

    zero_mass: float = 0.0
    bump_center: float = 6.0
    bump_width: float = 0.7
    transverse_amp: float = 0.0
    transverse_center: float | None = None
    transverse_width: float | None = None
    n_modes: int = 3
    seed: int = 0


def _bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    """C^2 compact bump (1 - y^2)^3 on |y| < 1, y = (x - center)/width."""
    y = (x - center) / width
    out = np.zeros_like(x)
    inside = np.abs(y) < 1.0
    out[inside] = (1.0 - y[inside] ** 2) ** 3
    return out


def _trig_mix(grid: HalfSpaceGrid, rng: np.random.Generator, n_modes: int) -> np.ndarray:
    """Random sum of nonzero torus modes, normalized to unit max."""
    kmax2 = min(2, (grid.n2 - 1) // 2)
    kmax3 = min(2, (grid.n3 - 1) // 2)
    if kmax2 == 0 and kmax3 == 0:
        raise ValueError(
            "transverse perturbation requested on a grid with no representable "
            f"nonzero modes (n2={grid.n2}, n3={grid.n3})"
        )
    x2 = grid.x2[:, None]
    x3 = grid.x3[None, :]
    f = np.zeros((grid.n2, grid.n3))
    for _ in range(n_modes):
        while True:
            k2 = int(rng.integers(0, kmax2 + 1))
            k3 = int(rng.integers(0, kmax3 + 1))
            if (k2, k3) != (0, 0):
                break
        amp = float(rng.uniform(0.5, 1.0))
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        f = f + amp * np.cos(2.0 * np.pi * (k2 * x2 + k3 * x3) + phase)
    return f / np.max(np.abs(f))


def init_state(grid: HalfSpaceGrid, table: ProfileTable, alpha: float,
               pert: PerturbationSpec | None) -> State:
    """Profile shifted by alpha plus the requested perturbation at t = 0.

    The density bump is normalized against the discrete interior quadrature
    so its cell-sum mass equals zero_mass exactly; momentum is left on the
    profile (the zero-mass knob moves density only). Tangential velocity
    gets the enveloped trigonometric perturbation; normal momentum stays
    untouched so the wall condition holds at t = 0.
    """
    st = State.alloc(grid)
    samp = profile_eval(table, grid.x1_padded + alpha)
    st.rho[...] = samp.rho[:, None, None]
    st.m[0] = samp.m[:, None, None]

    if pert is not None:
        if pert.zero_mass != 0.0:
            b = _bump(grid.x1_padded, pert.bump_center, pert.bump_width)
            interior_mass = np.sum(b[NGHOST:-NGHOST]) * grid.dx1
            if interior_mass <= 0.0:
                raise ValueError("density bump has no support inside the domain")
            st.rho += (pert.zero_mass / interior_mass) * b[:, None, None]
        if pert.transverse_amp != 0.0:
            rng = np.random.default_rng(pert.seed)
            center = pert.transverse_center if pert.transverse_center is not None \
                else pert.bump_center
            width = pert.transverse_width if pert.transverse_width is not None \
                else pert.bump_width
            env = _bump(grid.x1_padded, center, width)[:, None, None]
            for c in (1, 2):
                pattern = _trig_mix(grid, rng, pert.n_modes)[None, :, :]
                st.m[c] += st.rho * pert.transverse_amp * env * pattern

    conn = table.conn
    lo = 0.5 * conn.minus.rho
    hi = 0.5 * conn.minus.rho + conn.plus.rho
    rmin = float(np.min(st.rho[NGHOST:-NGHOST]))
    rmax = float(np.max(st.rho[NGHOST:-NGHOST]))
    if rmin <= lo or rmax >= hi:
        raise MassTooLarge(
            f"initial density range [{rmin:.6g}, {rmax:.6g}] leaves the "
            f"admissible window ({lo:.6g}, {hi:.6g})"
        )
    return st


def write_snapshot(state: State, path) -> None:
    """Serialize interior fields: CNS3 header then rho, m1, m2, m3 as
    little-endian float64 in row-major order with x3 fastest."""
    g = state.grid
    header = struct.pack(
        "<4sIIII", SNAPSHOT_MAGIC, SNAPSHOT_VERSION, g.n1, g.n2, g.n3
    ) + struct.pack("<dd", g.length, state.t)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.rho_int, dtype="<f8").tobytes())
        for c in range(3):
            fh.write(np.ascontiguousarray(state.m[c, NGHOST:-NGHOST], dtype="<f8").tobytes())


def read_snapshot(path) -> State:
    """Inverse of write_snapshot; ghost layers come back zeroed."""
    path = Path(path)
    if not path.is_file():
        raise SnapshotError(f"no snapshot at {path}")
    raw = path.read_bytes()
    if len(raw) < 36 or raw[:4] != SNAPSHOT_MAGIC:
        raise SnapshotError(f"{path} is not a CNS3 snapshot")
    version, n1, n2, n3 = struct.unpack("<IIII", raw[4:20])
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    length, t = struct.unpack("<dd", raw[20:36])
    count = n1 * n2 * n3
    expected = 36 + 4 * count * 8
    if len(raw) != expected:
        raise SnapshotError(
            f"{path}: expected {expected} bytes for {n1}x{n2}x{n3}, got {len(raw)}"
        )
    grid = make_grid(length, n1, n2, n3)
    st = State.alloc(grid)
    st.t = t
    data = np.frombuffer(raw, dtype="<f8", count=4 * count, offset=36)
    fields = data.reshape(4, n1, n2, n3)
    st.rho[NGHOST:-NGHOST] = fields[0]
    for c in range(3):
        st.m[c, NGHOST:-NGHOST] = fields[c + 1]
    return st
