"""Per-vertex discrete curvatures and the smoothness benchmark.

Gaussian curvature is the angle deficit over the vertex area,

    kg(v) = (2 pi - sum_k theta_k) / A(v),

with theta_k the incident triangle angles and A the mixed Voronoi area
(obtuse triangles fall back to A/2 at the obtuse corner, A/4 elsewhere;
a plain barycentric A/3 is available behind a flag).  Mean curvature comes
from the cotangent-weighted edge sum

    K(v) = (1 / (2 A(v))) * sum_j (cot a_ij + cot b_ij) (v_j - v_i),

a vector whose magnitude is twice the unsigned mean curvature; the signed
scalar reported is -(1/2) K . n with n the outward vertex normal, so a
unit sphere reports +1 and convex surfaces are positive.  Boundary
vertices are skipped and counted; degenerate cotangents are clamped to
1e6 in magnitude and flagged.

The benchmark numbers are the population standard deviations of the two
per-vertex quantities over all included vertices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .mesh import MeshAdjacency, TriMesh, build_adjacency, vertex_normals

_COT_CLAMP = 1e6


@dataclass
class CurvatureReport:
    kappa_g: np.ndarray       # (V,) NaN where skipped
    kappa_mean: np.ndarray    # (V,) NaN where skipped
    sigma_gc: float
    sigma_mc: float
    hist_gc: tuple[np.ndarray, np.ndarray]  # (edges B+1, counts B)
    hist_mc: tuple[np.ndarray, np.ndarray]
    n_included: int
    skipped_boundary_vertices: int
    n_flagged: int = 0


def _corner_geometry(mesh: TriMesh):
    """Angles, cotangents, areas and degeneracy flags per triangle corner."""
    p = mesh.vertices[mesh.triangles]          # (F, 3, 3)
    angles = np.empty((len(mesh.triangles), 3))
    cots = np.empty_like(angles)
    flagged = np.zeros(len(mesh.triangles), dtype=bool)
    for c in range(3):
        u = p[:, (c + 1) % 3] - p[:, c]
        w = p[:, (c + 2) % 3] - p[:, c]
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        dot = np.einsum("ij,ij->i", u, w)
        angles[:, c] = np.arctan2(cross, dot)
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = dot / cross
        bad = ~np.isfinite(cot) | (np.abs(cot) > _COT_CLAMP)
        cot = np.where(bad, np.sign(dot) * _COT_CLAMP, cot)
        flagged |= bad
        cots[:, c] = cot
    areas = 0.5 * np.linalg.norm(
        np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
    return p, angles, cots, areas, flagged


def _vertex_areas(mesh: TriMesh, p, angles, cots, areas, mode: str) -> np.ndarray:
    nv = len(mesh.vertices)
    out = np.zeros(nv)
    tris = mesh.triangles
    if mode == "barycentric":
        for c in range(3):
            np.add.at(out, tris[:, c], areas / 3.0)
        return out
    if mode != "mixed":
        raise ValueError(f"unknown vertex area mode {mode!r}")
    obtuse_corner = np.argmax(angles, axis=1)
    is_obtuse = angles[np.arange(len(angles)), obtuse_corner] > 0.5 * np.pi
    for c in range(3):
        c1, c2 = (c + 1) % 3, (c + 2) % 3
        d2_1 = np.sum((p[:, c] - p[:, c1]) ** 2, axis=1)
        d2_2 = np.sum((p[:, c] - p[:, c2]) ** 2, axis=1)
        voronoi = (d2_1 * cots[:, c2] + d2_2 * cots[:, c1]) / 8.0
        fallback = np.where(obtuse_corner == c, areas / 2.0, areas / 4.0)
        np.add.at(out, tris[:, c], np.where(is_obtuse, fallback, voronoi))
    return out


def gaussian_curvature(mesh: TriMesh, adjacency: MeshAdjacency | None = None,
                       area_mode: str = "mixed") -> np.ndarray:
    """Angle deficit over vertex area; NaN at boundary/degenerate vertices."""
    if len(mesh.triangles) == 0:
        return np.full(len(mesh.vertices), np.nan)
    adjacency = adjacency or build_adjacency(mesh)
    p, angles, cots, areas, _ = _corner_geometry(mesh)
    vert_area = _vertex_areas(mesh, p, angles, cots, areas, area_mode)
    angle_sum = np.zeros(len(mesh.vertices))
    for c in range(3):
        np.add.at(angle_sum, mesh.triangles[:, c], angles[:, c])
    out = np.full(len(mesh.vertices), np.nan)
    ok = ~adjacency.boundary_vertex & (vert_area > 0.0)
    out[ok] = (2.0 * np.pi - angle_sum[ok]) / vert_area[ok]
    return out


def mean_curvature(mesh: TriMesh, adjacency: MeshAdjacency | None = None,
                   area_mode: str = "mixed") -> np.ndarray:
    """Signed scalar mean curvature; positive on convex surfaces."""
    if len(mesh.triangles) == 0:
        return np.full(len(mesh.vertices), np.nan)
    adjacency = adjacency or build_adjacency(mesh)
    p, angles, cots, areas, _ = _corner_geometry(mesh)
    vert_area = _vertex_areas(mesh, p, angles, cots, areas, area_mode)
    nv = len(mesh.vertices)
    vec = np.zeros((nv, 3))
    tris = mesh.triangles
    verts = mesh.vertices
    for c in range(3):
        c1, c2 = (c + 1) % 3, (c + 2) % 3
        edge = verts[tris[:, c2]] - verts[tris[:, c1]]
        contrib = cots[:, c, None] * edge
        np.add.at(vec, tris[:, c1], contrib)
        np.add.at(vec, tris[:, c2], -contrib)
    normals = vertex_normals(mesh)
    out = np.full(nv, np.nan)
    ok = ~adjacency.boundary_vertex & (vert_area > 0.0)
    kvec = vec[ok] / (2.0 * vert_area[ok, None])
    out[ok] = -0.5 * np.einsum("ij,ij->i", kvec, normals[ok])
    return out


def _clipped_histogram(values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width bins between the 1st and 99th percentile, values clipped in."""
    if values.size == 0:
        edges = np.linspace(0.0, 1.0, bins + 1)
        return edges, np.zeros(bins, dtype=np.int64)
    lo, hi = np.percentile(values, [1.0, 99.0])
    if not hi > lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(np.clip(values, lo, hi), bins=edges)
    return edges, counts.astype(np.int64)


def curvature_report(mesh: TriMesh, bins: int = 64,
                     area_mode: str = "mixed") -> CurvatureReport:
    """Curvature statistics over all included (interior, non-degenerate) vertices."""
    nv = len(mesh.vertices)
    if len(mesh.triangles) == 0:
        empty = np.full(nv, np.nan)
        edges = np.linspace(0.0, 1.0, bins + 1)
        zero = np.zeros(bins, dtype=np.int64)
        return CurvatureReport(empty, empty, float("nan"), float("nan"),
                               (edges, zero), (edges, zero.copy()), 0, 0)
    adjacency = build_adjacency(mesh)
    p, angles, cots, areas, flagged = _corner_geometry(mesh)
    kg = gaussian_curvature(mesh, adjacency, area_mode)
    km = mean_curvature(mesh, adjacency, area_mode)
    ok = np.isfinite(kg) & np.isfinite(km)
    n_inc = int(ok.sum())
    sigma_gc = float(np.std(kg[ok])) if n_inc else float("nan")
    sigma_mc = float(np.std(km[ok])) if n_inc else float("nan")
    return CurvatureReport(
        kg, km, sigma_gc, sigma_mc,
        _clipped_histogram(kg[ok], bins), _clipped_histogram(km[ok], bins),
        n_inc, nv - n_inc, int(flagged.sum()))


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def write_report_csv(path, report: CurvatureReport) -> None:
    lines = ["vertex,kg,km"]
    for v in range(len(report.kappa_g)):
        kg, km = report.kappa_g[v], report.kappa_mean[v]
        if np.isfinite(kg) and np.isfinite(km):
            lines.append(f"{v},{float(kg)!r},{float(km)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(path, report: CurvatureReport) -> None:
    payload = {"sigma_gc": report.sigma_gc, "sigma_mc": report.sigma_mc,
               "n_vertices": report.n_included,
               "n_skipped": report.skipped_boundary_vertices}
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def write_histogram_csv(path, report: CurvatureReport) -> None:
    """Two blocks of rows sharing one header: first the kg bins, then the km bins."""
    lines = ["bin_lo,bin_hi,count_gc,count_mc"]
    edges, counts = report.hist_gc
    for b in range(len(counts)):
        lines.append(f"{float(edges[b])!r},{float(edges[b + 1])!r},{counts[b]},0")
    edges, counts = report.hist_mc
    for b in range(len(counts)):
        lines.append(f"{float(edges[b])!r},{float(edges[b + 1])!r},0,{counts[b]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
