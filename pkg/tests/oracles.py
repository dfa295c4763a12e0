"""Independent oracles and fixtures shared by the test suite.

Everything here is computed by a different route than the library code it
checks: dense DFT matrices instead of FFTs, all-pairs scans instead of
separable transforms, closed-form meshes instead of extracted ones.
"""

from __future__ import annotations

import numpy as np

from slicesurf.grid import GridSpec


# ---------------------------------------------------------------------------
# Dense Fourier operators on flattened (x-fastest) vectors
# ---------------------------------------------------------------------------

def _dft_1d(n: int) -> np.ndarray:
    p = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(p, p) / n)


def _deriv_freqs(n: int) -> np.ndarray:
    xi = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        xi[n // 2] = 0.0
    return xi


class DenseOps:
    """Dense real matrices for Laplacian and first derivatives on a grid.

    Vectors are fields flattened x-fastest (ravel order 'F' of an
    (nx, ny, nz) array).
    """

    def __init__(self, shape: tuple[int, int, int]):
        nx, ny, nz = shape
        self.shape = shape
        F = np.kron(_dft_1d(nz), np.kron(_dft_1d(ny), _dft_1d(nx)))
        Finv = np.conj(F) / (nx * ny * nz)
        kx, ky, kz = np.meshgrid(_deriv_freqs(nx), _deriv_freqs(ny),
                                 _deriv_freqs(nz), indexing="ij")
        kx = kx.ravel(order="F")
        ky = ky.ravel(order="F")
        kz = kz.ravel(order="F")
        k2 = kx ** 2 + ky ** 2 + kz ** 2
        self.lap = (Finv @ (-4.0 * np.pi ** 2 * k2[:, None] * F)).real
        self.gx = (Finv @ (2j * np.pi * kx[:, None] * F)).real
        self.gy = (Finv @ (2j * np.pi * ky[:, None] * F)).real
        self.gz = (Finv @ (2j * np.pi * kz[:, None] * F)).real
        self.eye = np.eye(nx * ny * nz)


def flatten(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).ravel(order="F")


def unflatten(v: np.ndarray, shape) -> np.ndarray:
    return np.asarray(v).reshape(shape, order="F")


def _well(v):
    w1 = v * (v - 1.0) * (2.0 * v - 1.0)
    w2 = 1.0 - 6.0 * v + 6.0 * v * v
    return w1, w2


def dense_pgdm_step(u, lo, hi, eps, tau, formulation, ops: DenseOps):
    """Straight-line dense transcription of one projected implicit step."""
    v = np.clip(u, lo, hi)
    w1, w2 = _well(v)
    L = ops.lap
    if formulation == "perimeter":
        rhs = v - (tau / eps) * w1
        A = ops.eye - eps * tau * L
    elif formulation == "willmore":
        rhs = (v + (tau / eps) * (L @ w1) + (tau / eps) * w2 * (L @ v)
               - (tau / eps ** 3) * w1 * w2)
        A = ops.eye + tau * eps * (L @ L)
    else:
        rhs = (v - (tau / eps) * w1 + (tau / eps) * (L @ w1)
               + (tau / eps) * w2 * (L @ v) - (tau / eps ** 3) * w1 * w2)
        A = ops.eye - eps * tau * L + tau * eps * (L @ L)
    return np.linalg.solve(A, rhs)


def dense_admm_step(u, w, lam, lo, hi, eps, tau, rho, ops: DenseOps):
    """Dense transcription of one projected splitting step.

    w and lam are (3, V) arrays of flattened components.
    """
    v = np.clip(u, lo, hi)
    w1, w2 = _well(v)
    L, G = ops.lap, (ops.gx, ops.gy, ops.gz)
    div_w = sum(G[a] @ w[a] for a in range(3))
    div_lam = sum(G[a] @ lam[a] for a in range(3))
    rhs_u = v + tau * (-rho * div_w + div_lam - w1 / eps
                       + div_w * w2 / eps - w1 * w2 / eps ** 3)
    u_next = np.linalg.solve(ops.eye - tau * rho * L, rhs_u)

    w1n = _well(u_next)[0]
    grad_u = np.stack([G[a] @ u_next for a in range(3)])
    grad_w1 = np.stack([G[a] @ w1n for a in range(3)])
    rhs_w = w + tau * (-grad_w1 / eps - rho * (w - grad_u - lam / rho))
    A = (1.0 + eps * tau) * ops.eye - eps * tau * L
    w_next = np.stack([np.linalg.solve(A, rhs_w[a]) for a in range(3)])
    lam_next = lam + rho * (grad_u - w_next)
    return u_next, w_next, lam_next


# ---------------------------------------------------------------------------
# Distance and volume oracles
# ---------------------------------------------------------------------------

def brute_force_sq_edt(bits: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distance (voxel units) to the set."""
    setpts = np.argwhere(bits)
    grids = np.meshgrid(*(np.arange(n) for n in bits.shape), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    d2 = ((pts[:, None, :] - setpts[None, :, :]) ** 2).sum(-1).min(1)
    return d2.reshape(bits.shape)


def smooth_random_field(spec: GridSpec, rng: np.random.Generator,
                        kmax: int = 4, amp: float = 0.4,
                        offset: float = 0.5) -> np.ndarray:
    """Band-limited random field, values around `offset`."""
    import scipy.fft as fft
    white = rng.standard_normal(spec.shape)
    F = fft.rfftn(white)
    kx = _deriv_freqs(spec.nx)[:, None, None]
    ky = _deriv_freqs(spec.ny)[None, :, None]
    kz = np.fft.rfftfreq(spec.nz, d=1.0 / spec.nz)[None, None, :]
    F *= (kx ** 2 + ky ** 2 + kz ** 2) <= kmax ** 2
    f = fft.irfftn(F, s=spec.shape)
    peak = np.abs(f).max()
    return offset + (amp / peak) * f if peak > 0 else np.full(spec.shape, offset)


# ---------------------------------------------------------------------------
# Closed-form meshes
# ---------------------------------------------------------------------------

def icosphere(subdivisions: int, radius: float = 1.0,
              center=(0.0, 0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron projected to a sphere, outward orientation."""
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [tuple(v) for v in verts]
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}
        new_faces = []

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = np.array(verts[a]) + np.array(verts[b])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius + np.asarray(center)
    return v, np.array(faces, dtype=np.int64)


def capped_cylinder(radius: float, height: float, n_seg: int = 48,
                    n_rings: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Closed cylinder along z, outward orientation; z in [0, height]."""
    ang = 2.0 * np.pi * np.arange(n_seg) / n_seg
    ring = np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1)
    verts = []
    for r in range(n_rings + 1):
        z = height * r / n_rings
        for x, y in ring:
            verts.append((x, y, z))
    faces = []
    for r in range(n_rings):
        for s in range(n_seg):
            a = r * n_seg + s
            b = r * n_seg + (s + 1) % n_seg
            c = (r + 1) * n_seg + s
            d = (r + 1) * n_seg + (s + 1) % n_seg
            faces += [(a, b, d), (a, d, c)]
    bot = len(verts)
    verts.append((0.0, 0.0, 0.0))
    top = len(verts)
    verts.append((0.0, 0.0, height))
    for s in range(n_seg):
        a, b = s, (s + 1) % n_seg
        faces.append((bot, b, a))
        a2 = n_rings * n_seg + s
        b2 = n_rings * n_seg + (s + 1) % n_seg
        faces.append((top, a2, b2))
    return np.array(verts), np.array(faces, dtype=np.int64)


def flat_grid_patch(n: int = 4) -> tuple[np.ndarray, np.ndarray, int]:
    """Unit-grid planar triangulation; returns (verts, faces, centre vertex id)."""
    ids: dict[tuple[int, int], int] = {}

    def vid(i: int, j: int) -> int:
        return ids.setdefault((i, j), len(ids))

    faces = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces += [(a, b, c), (a, c, d)]
    verts = np.zeros((len(ids), 3))
    for (i, j), k in ids.items():
        verts[k] = (i, j, 0.0)
    return verts, np.array(faces, dtype=np.int64), ids[(n // 2, n // 2)]
