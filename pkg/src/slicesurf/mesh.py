"""Isosurface extraction at a level set and the triangle-mesh container.

Extraction uses the classic fixed 256-case marching-cubes lookup (via
scikit-image) with linear edge interpolation, so results are deterministic
for a given field.  Vertices are reported in domain units at the voxel
-centre lattice, triangles are wound counter-clockwise as seen from the
outside, where outside means the side with values below the level.
Vertices that land within 1e-6 (index units) of a lattice node are snapped
to it and coincident vertices merged, which removes the sliver triangles
that would otherwise dominate curvature statistics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from skimage import measure

from .errors import NonManifoldError
from .grid import ScalarField3D

_SNAP_TOL = 1e-6
_DEGENERATE_AREA = 1e-12


@dataclass
class TriMesh:
    """Indexed triangle mesh; vertices in domain units."""

    vertices: np.ndarray   # (V, 3) float64
    triangles: np.ndarray  # (F, 3) int64

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)

    @classmethod
    def empty(cls) -> "TriMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(
            np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    def euler_characteristic(self) -> int:
        edges = np.concatenate([self.triangles[:, [0, 1]],
                                self.triangles[:, [1, 2]],
                                self.triangles[:, [2, 0]]])
        edges = np.unique(np.sort(edges, axis=1), axis=0)
        return len(self.vertices) - len(edges) + len(self.triangles)


def _snap_and_merge(verts_idx: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Snap near-lattice vertices (index units), merge duplicates, cull slivers."""
    rounded = np.rint(verts_idx)
    near = np.abs(verts_idx - rounded) < _SNAP_TOL
    verts_idx = np.where(near, rounded, verts_idx)
    uniq, inverse = np.unique(verts_idx, axis=0, return_inverse=True)
    faces = inverse[faces]
    keep = ((faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2])
            & (faces[:, 2] != faces[:, 0]))
    return uniq, faces[keep]


def extract_isosurface(u: ScalarField3D, level: float = 0.5) -> TriMesh:
    """Marching-cubes triangulation of {u = level}.

    Returns an empty mesh when the level is not crossed.  Output triangles
    have consistent orientation with outward normals pointing toward
    u < level.
    """
    data = u.data
    if not (data.min() < level < data.max()):
        return TriMesh.empty()
    verts_idx, faces, _, _ = measure.marching_cubes(
        data, level=level, method="lorensen", allow_degenerate=False)
    verts_idx, faces = _snap_and_merge(verts_idx, faces)
    # index -> physical: voxel centres sit at (index + 1/2) * spacing
    spacing = np.array(u.spec.spacing)
    verts = (verts_idx + 0.5) * spacing
    # the lookup winds triangles with normals toward increasing u; flip so
    # outward = toward u < level
    faces = faces[:, ::-1]
    mesh = TriMesh(verts, faces)
    good = mesh.triangle_areas() > _DEGENERATE_AREA
    return TriMesh(verts, faces[good])


@dataclass
class MeshAdjacency:
    """Per-vertex one-ring tables for a manifold-checked mesh."""

    vertex_triangles: list[np.ndarray]
    neighbors: list[np.ndarray]          # cyclically ordered where possible
    edge_triangles: dict[tuple[int, int], list[int]]
    boundary_vertex: np.ndarray          # bool (V,)

    @property
    def n_boundary(self) -> int:
        return int(self.boundary_vertex.sum())


def build_adjacency(mesh: TriMesh) -> MeshAdjacency:
    """One-ring adjacency; raises NonManifoldError for over-shared edges."""
    nv = len(mesh.vertices)
    tris = mesh.triangles
    edge_tris: dict[tuple[int, int], list[int]] = {}
    vert_tris: list[list[int]] = [[] for _ in range(nv)]
    for t, (a, b, c) in enumerate(tris):
        for v in (a, b, c):
            vert_tris[v].append(t)
        for e in ((a, b), (b, c), (c, a)):
            key = (min(e), max(e))
            edge_tris.setdefault(key, []).append(t)
    bad = [e for e, ts in edge_tris.items() if len(ts) > 2]
    if bad:
        raise NonManifoldError(bad)
    boundary_edges = {e for e, ts in edge_tris.items() if len(ts) == 1}
    boundary_vertex = np.zeros(nv, dtype=bool)
    for a, b in boundary_edges:
        boundary_vertex[a] = boundary_vertex[b] = True

    neighbors: list[np.ndarray] = []
    for v in range(nv):
        ring = _ordered_ring(v, vert_tris[v], tris)
        neighbors.append(np.array(ring, dtype=np.int64))
    return MeshAdjacency([np.array(ts, dtype=np.int64) for ts in vert_tris],
                         neighbors, edge_tris, boundary_vertex)


def _ordered_ring(v: int, tri_ids: list[int], tris: np.ndarray) -> list[int]:
    """Walk the triangle fan around v; falls back to unordered on failure."""
    if not tri_ids:
        return []
    succ: dict[int, int] = {}
    for t in tri_ids:
        a, b, c = tris[t]
        if a == v:
            succ[b] = c
        elif b == v:
            succ[c] = a
        else:
            succ[a] = b
    # start from a vertex that is not anyone's successor (boundary fan start)
    starts = set(succ) - set(succ.values())
    cur = next(iter(starts)) if starts else next(iter(succ))
    ring = [cur]
    for _ in range(len(succ)):
        nxt = succ.get(cur)
        if nxt is None or nxt == ring[0]:
            break
        ring.append(nxt)
        cur = nxt
    if len(set(ring)) != len(set(succ) | set(succ.values())):
        # non-walkable fan: return the unordered neighbour set
        return sorted(set(succ) | set(succ.values()))
    return ring


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Area-weighted unit vertex normals (outward for extracted surfaces)."""
    nv = len(mesh.vertices)
    p = mesh.vertices[mesh.triangles]
    face_n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])  # 2*area weighted
    out = np.zeros((nv, 3))
    for k in range(3):
        np.add.at(out, mesh.triangles[:, k], face_n)
    norm = np.linalg.norm(out, axis=1)
    good = norm > 0
    out[good] /= norm[good, None]
    return out


# ---------------------------------------------------------------------------
# OBJ subset: v / f records, 1-based indices
# ---------------------------------------------------------------------------

def write_obj(path, mesh: TriMesh) -> None:
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
    for a, b, c in mesh.triangles:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def read_obj(path) -> TriMesh:
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{lineno}: malformed vertex record")
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ValueError(f"{path}:{lineno}: only triangles supported")
                faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    if not verts:
        return TriMesh.empty()
    return TriMesh(np.array(verts), np.array(faces, dtype=np.int64))
