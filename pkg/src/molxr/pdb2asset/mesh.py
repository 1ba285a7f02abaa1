"""Triangle-mesh generation: UV spheres per atom, cylinders per bond.

Quality q in 1..4 tessellates spheres with 8*2^(q-1) segments and
4*2^(q-1) rings, giving (rings-1)*segments + 2 vertices per sphere.
Ball-and-stick draws atoms at a quarter of their vdW radius and splits
each bond cylinder at the midpoint so the two halves take the two
atoms' colors; space-filling draws full-radius spheres and no bonds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elements import element_info
from .pdbparse import EmptyModel, MolecularModel

BALL_RADIUS_FACTOR = 0.25
BOND_RADIUS = 0.12

STYLES = ("ball_and_stick", "space_filling")
QUALITY_RANGE = (1, 4)


@dataclass(frozen=True)
class Submesh:
    """A contiguous vertex/index range drawn with one solid color."""

    index_start: int
    index_count: int
    vertex_start: int
    vertex_count: int
    color: tuple
    kind: str


@dataclass
class Mesh:
    positions: np.ndarray          # (n, 3) float32
    normals: np.ndarray            # (n, 3) float32
    indices: np.ndarray            # (m,) uint32, triangle list
    submeshes: list = field(default_factory=list)

    @property
    def vertex_count(self) -> int:
        return len(self.positions)

    @property
    def triangle_count(self) -> int:
        return len(self.indices) // 3


def sphere_dims(quality: int) -> tuple[int, int]:
    _check_quality(quality)
    return 8 * 2 ** (quality - 1), 4 * 2 ** (quality - 1)


def sphere_vertex_count(quality: int) -> int:
    segments, rings = sphere_dims(quality)
    return (rings - 1) * segments + 2


def _check_quality(quality: int) -> None:
    if not (QUALITY_RANGE[0] <= quality <= QUALITY_RANGE[1]):
        raise ValueError(f"quality must be in {QUALITY_RANGE[0]}..{QUALITY_RANGE[1]}")


def uv_sphere(center, radius: float, segments: int, rings: int):
    """Vertices, outward unit normals, and CCW triangles of a UV sphere."""
    verts = np.empty(((rings - 1) * segments + 2, 3), dtype=np.float64)
    verts[0] = (0.0, radius, 0.0)
    phi = np.linspace(0.0, 2.0 * math.pi, segments, endpoint=False)
    row = 1
    for i in range(1, rings):
        theta = math.pi * i / rings
        y = radius * math.cos(theta)
        r = radius * math.sin(theta)
        verts[row:row + segments, 0] = r * np.cos(phi)
        verts[row:row + segments, 1] = y
        verts[row:row + segments, 2] = r * np.sin(phi)
        row += segments
    verts[-1] = (0.0, -radius, 0.0)

    normals = verts / radius
    last = len(verts) - 1
    tris = []
    ring0 = 1
    for j in range(segments):
        nj = (j + 1) % segments
        tris.append((0, ring0 + nj, ring0 + j))
    for i in range(rings - 2):
        a = 1 + i * segments
        b = a + segments
        for j in range(segments):
            nj = (j + 1) % segments
            tris.append((a + j, a + nj, b + nj))
            tris.append((a + j, b + nj, b + j))
    bottom_ring = 1 + (rings - 2) * segments
    for j in range(segments):
        nj = (j + 1) % segments
        tris.append((last, bottom_ring + j, bottom_ring + nj))
    verts = verts + np.asarray(center, dtype=np.float64)
    return verts, normals, np.asarray(tris, dtype=np.uint32)


def open_cylinder(p0, p1, radius: float, segments: int):
    """Vertices, radial unit normals, and CCW triangles of an open tube
    from p0 to p1."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    axis = p1 - p0
    length = float(np.linalg.norm(axis))
    if length <= 0.0:
        raise ValueError("degenerate cylinder: zero length")
    axis /= length
    pick = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    n1 = np.cross(pick, axis)
    n1 /= np.linalg.norm(n1)
    n2 = np.cross(axis, n1)

    phi = np.linspace(0.0, 2.0 * math.pi, segments, endpoint=False)
    radial = np.outer(np.cos(phi), n1) + np.outer(np.sin(phi), n2)
    verts = np.empty((2 * segments, 3), dtype=np.float64)
    verts[:segments] = p0 + radius * radial
    verts[segments:] = p1 + radius * radial
    normals = np.vstack([radial, radial])

    tris = []
    for j in range(segments):
        nj = (j + 1) % segments
        b0, b1 = j, nj
        t0, t1 = segments + j, segments + nj
        tris.append((b0, t1, b1))
        tris.append((b0, t0, t1))
    return verts, normals, np.asarray(tris, dtype=np.uint32)


class _MeshBuilder:
    def __init__(self):
        self.positions = []
        self.normals = []
        self.indices = []
        self.submeshes = []

    def add(self, verts, normals, tris, color, kind):
        base = sum(len(v) for v in self.positions)
        index_start = sum(len(t) for t in self.indices) * 3
        self.positions.append(verts)
        self.normals.append(normals)
        self.indices.append(tris + base)
        self.submeshes.append(Submesh(
            index_start=index_start, index_count=tris.size,
            vertex_start=base, vertex_count=len(verts),
            color=color, kind=kind))

    def finish(self) -> Mesh:
        return Mesh(
            positions=np.vstack(self.positions).astype(np.float32),
            normals=np.vstack(self.normals).astype(np.float32),
            indices=np.concatenate([t.reshape(-1) for t in self.indices]).astype(np.uint32),
            submeshes=self.submeshes)


def build_mesh(model: MolecularModel, style: str = "ball_and_stick",
               quality: int = 2) -> Mesh:
    """Tessellate a molecular model into one colored triangle mesh."""
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    _check_quality(quality)
    if not model.atoms:
        raise EmptyModel("cannot mesh a model with no atoms")
    segments, rings = sphere_dims(quality)
    builder = _MeshBuilder()
    for atom in model.atoms:
        info = element_info(atom.element)
        radius = info.vdw_radius if style == "space_filling" else BALL_RADIUS_FACTOR * info.vdw_radius
        p = atom.position
        verts, normals, tris = uv_sphere((p.x, p.y, p.z), radius, segments, rings)
        builder.add(verts, normals, tris, info.color, "sphere")
    if style == "ball_and_stick":
        for i, j in model.bonds:
            ai, aj = model.atoms[i], model.atoms[j]
            pi = np.array([ai.position.x, ai.position.y, ai.position.z])
            pj = np.array([aj.position.x, aj.position.y, aj.position.z])
            mid = (pi + pj) / 2.0
            for p_from, p_to, atom in ((pi, mid, ai), (mid, pj, aj)):
                verts, normals, tris = open_cylinder(p_from, p_to, BOND_RADIUS, segments)
                builder.add(verts, normals, tris, element_info(atom.element).color, "cylinder")
    return builder.finish()
