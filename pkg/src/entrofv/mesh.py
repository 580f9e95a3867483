"""Admissible polygonal meshes of 2D domains for two-point flux schemes.

A :class:`PrimalMesh` stores cells as counterclockwise vertex loops together
with one point ``x_K`` per cell, and the derived edge data used by finite
volume fluxes: lengths ``m_sigma``, center distances ``d_sigma`` and
transmissibilities ``tau_sigma = m_sigma / d_sigma``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

ORTHO_TOL = 1e-9
AREA_RTOL = 1e-12


class MeshError(ValueError):
    """Raised for malformed or geometrically invalid meshes."""


class EdgeKind(enum.IntEnum):
    INTERIOR = 0
    DIRICHLET = 1
    NEUMANN = 2


def polygon_area(pts: np.ndarray) -> float:
    """Signed shoelace area of a closed polygon given as an (n, 2) array."""
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cross = x * ys - xs * y
    a = 0.5 * cross.sum()
    return np.array([((x + xs) * cross).sum(), ((y + ys) * cross).sum()]) / (6.0 * a)


def circumcenter(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    a2, b2, c2 = a @ a, b @ b, c @ c
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    return np.array([ux, uy])


def _point_line_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points ``p`` to the lines through ``a`` and ``b`` (row-wise)."""
    t = b - a
    cross = t[:, 0] * (p[:, 1] - a[:, 1]) - t[:, 1] * (p[:, 0] - a[:, 0])
    return np.abs(cross) / np.hypot(t[:, 0], t[:, 1])


@dataclass(frozen=True, eq=False)
class PrimalMesh:
    """Polygonal mesh with TPFA edge geometry.

    Edges are numbered once; ``edge_cells[s] = (K, L)`` with ``L = -1`` on the
    boundary. Arrays are treated as read-only after construction.
    """

    vertices: np.ndarray
    cells: tuple[tuple[int, ...], ...]
    centers: np.ndarray
    areas: np.ndarray
    edges: np.ndarray
    edge_cells: np.ndarray
    edge_kind: np.ndarray
    edge_midpoints: np.ndarray
    edge_lengths: np.ndarray
    edge_dist: np.ndarray
    cell_edges: tuple[np.ndarray, ...]
    admissible: bool
    zeta: float
    size: float
    meta: dict = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def transmissibility(self) -> np.ndarray:
        return self.edge_lengths / self.edge_dist

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.edge_kind == EdgeKind.INTERIOR)

    @property
    def dirichlet(self) -> np.ndarray:
        return np.flatnonzero(self.edge_kind == EdgeKind.DIRICHLET)

    @property
    def neumann(self) -> np.ndarray:
        return np.flatnonzero(self.edge_kind == EdgeKind.NEUMANN)

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.edge_kind != EdgeKind.INTERIOR)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    def cell_polygon(self, k: int) -> np.ndarray:
        return self.vertices[list(self.cells[k])]

    def with_boundary(self, dirichlet: Callable[[np.ndarray], bool] | None) -> "PrimalMesh":
        """Copy of the mesh with boundary edges re-tagged by a midpoint predicate."""
        return PrimalMesh.from_polygons(
            self.vertices, self.cells, self.centers, dirichlet=dirichlet, meta=dict(self.meta)
        )

    # ------------------------------------------------------------------ build
    @classmethod
    def from_polygons(
        cls,
        vertices: np.ndarray,
        cells: Sequence[Sequence[int]],
        centers: np.ndarray | None = None,
        *,
        dirichlet: Callable[[np.ndarray], bool] | None = None,
        boundary_tags: dict[tuple[int, int], EdgeKind] | None = None,
        meta: dict | None = None,
    ) -> "PrimalMesh":
        """Build and validate a mesh.

        Parameters
        ----------
        vertices : (nv, 2) array
        cells : vertex loops; clockwise loops are reoriented.
        centers : optional (nc, 2) cell points; vertex-loop centroids otherwise.
        dirichlet : predicate on an edge midpoint selecting Dirichlet edges.
            Boundary edges default to Neumann.
        boundary_tags : explicit tags keyed by sorted vertex pairs; takes
            precedence over ``dirichlet``.
        """
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or not np.all(np.isfinite(verts)):
            raise MeshError("vertices must be a finite (n, 2) array")
        nv = len(verts)
        loops: list[tuple[int, ...]] = []
        areas = np.empty(len(cells))
        for k, cell in enumerate(cells):
            loop = tuple(int(v) for v in cell)
            if len(loop) < 3:
                raise MeshError(f"cell {k} has fewer than 3 vertices")
            bad = [v for v in loop if v < 0 or v >= nv]
            if bad:
                raise MeshError(f"cell {k} references missing vertex {bad[0]}")
            a = polygon_area(verts[list(loop)])
            if a < 0:
                loop = loop[::-1]
                a = -a
            if not a > 0:
                raise MeshError(f"cell {k} has zero area")
            loops.append(loop)
            areas[k] = a
        if centers is None:
            ctr = np.array([polygon_centroid(verts[list(c)]) for c in loops])
        else:
            ctr = np.asarray(centers, dtype=float).reshape(len(loops), 2)

        edge_index: dict[tuple[int, int], int] = {}
        edge_list: list[tuple[int, int]] = []
        owners: list[list[int]] = []
        cell_edges: list[np.ndarray] = []
        for k, loop in enumerate(loops):
            ids = []
            for a, b in zip(loop, loop[1:] + loop[:1]):
                key = (a, b) if a < b else (b, a)
                s = edge_index.get(key)
                if s is None:
                    s = edge_index[key] = len(edge_list)
                    edge_list.append(key)
                    owners.append([])
                owners[s].append(k)
                ids.append(s)
            cell_edges.append(np.array(ids, dtype=np.intp))
        edges = np.array(edge_list, dtype=np.intp).reshape(-1, 2)
        edge_cells = np.full((len(edges), 2), -1, dtype=np.intp)
        for s, own in enumerate(owners):
            if len(own) > 2:
                raise MeshError(f"edge {edge_list[s]} is shared by {len(own)} cells")
            edge_cells[s, : len(own)] = own

        a, b = verts[edges[:, 0]], verts[edges[:, 1]]
        mid = 0.5 * (a + b)
        length = np.hypot(*(b - a).T)
        K, L = edge_cells[:, 0], edge_cells[:, 1]
        inner = L >= 0
        kind = np.full(len(edges), int(EdgeKind.NEUMANN), dtype=np.int8)
        kind[inner] = EdgeKind.INTERIOR
        for s in np.flatnonzero(~inner):
            key = tuple(edges[s])
            if boundary_tags is not None and key in boundary_tags:
                kind[s] = boundary_tags[key]
            elif dirichlet is not None and dirichlet(mid[s]):
                kind[s] = EdgeKind.DIRICHLET

        dist_K = _point_line_distance(ctr[K], a, b)
        dist = dist_K.copy()
        dist[inner] = np.hypot(*(ctr[L[inner]] - ctr[K[inner]]).T)
        if np.any(dist <= 0):
            s = int(np.flatnonzero(dist <= 0)[0])
            raise MeshError(f"edge {edge_list[s]} has zero center distance")

        t = (b - a) / length[:, None]
        side = lambda p: t[:, 0] * (p[:, 1] - a[:, 1]) - t[:, 1] * (p[:, 0] - a[:, 0])
        sk = side(ctr[K])
        sl = side(ctr[np.where(inner, L, K)])
        crossing = inner & ~(sk * sl < 0)
        if np.any(crossing):
            s = int(np.flatnonzero(crossing)[0])
            raise MeshError(f"centers of cells {tuple(edge_cells[s])} lie on the same side of edge {s}")
        skew = np.zeros(len(edges))
        skew[inner] = np.abs(np.einsum("ij,ij->i", ctr[L[inner]] - ctr[K[inner]], t[inner]))
        admissible = bool(np.all(skew[inner] <= ORTHO_TOL * dist[inner]))

        zeta = np.inf
        for k, ids in enumerate(cell_edges):
            dk = _point_line_distance(np.repeat(ctr[k][None], len(ids), 0), a[ids], b[ids])
            zeta = min(zeta, float(np.min(dk / dist[ids])))
        if not zeta > 0:
            raise MeshError("regularity parameter zeta is not positive")
        size = max(_diameter(verts[list(c)]) for c in loops)

        return cls(
            vertices=verts,
            cells=tuple(loops),
            centers=ctr,
            areas=areas,
            edges=edges,
            edge_cells=edge_cells,
            edge_kind=kind,
            edge_midpoints=mid,
            edge_lengths=length,
            edge_dist=dist,
            cell_edges=tuple(cell_edges),
            admissible=admissible,
            zeta=float(zeta),
            size=float(size),
            meta=dict(meta or {}),
        )


def _diameter(pts: np.ndarray) -> float:
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


def regularity_report(mesh: PrimalMesh) -> dict:
    """Regularity parameter, size, orthogonality flag and entity counts."""
    return {
        "zeta": mesh.zeta,
        "size": mesh.size,
        "orthogonal": mesh.admissible,
        "cells": mesh.n_cells,
        "edges": mesh.n_edges,
        "vertices": mesh.n_vertices,
        "interior_edges": int(len(mesh.interior)),
        "dirichlet_edges": int(len(mesh.dirichlet)),
        "neumann_edges": int(len(mesh.neumann)),
    }


# ------------------------------------------------------------------ generators
def generate_cartesian(
    nx: int,
    ny: int,
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0),
    dirichlet: Callable[[np.ndarray], bool] | None = None,
) -> PrimalMesh:
    """Uniform ``nx`` by ``ny`` rectangles on ``(x0, x1, y0, y1)``."""
    if int(nx) < 1 or int(ny) < 1:
        raise MeshError("nx and ny must be positive")
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise MeshError("degenerate rectangle")
    xs, ys = np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])
    vid = lambda i, j: j * (nx + 1) + i
    cells = [
        (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
        for j in range(ny)
        for i in range(nx)
    ]
    centers = np.array(
        [[0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])] for j in range(ny) for i in range(nx)]
    )
    return PrimalMesh.from_polygons(
        verts, cells, centers, dirichlet=dirichlet, meta={"family": "cartesian", "nx": nx, "ny": ny}
    )


# One quarter of the coarse acute triangulation of [0, 1]^2; the full level-0
# mesh is its 2x2 translate (56 triangles, longest edge 0.25).
_TILE_TRIANGLES = (
    ((0.0, 0.0), (0.15, 0.15), (0.0, 0.25)),
    ((0.0, 0.0), (0.25, 0.0), (0.15, 0.15)),
    ((0.0, 0.25), (0.15, 0.15), (0.175, 0.325)),
    ((0.0, 0.25), (0.175, 0.325), (0.0, 0.5)),
    ((0.0, 0.5), (0.175, 0.325), (0.25, 0.5)),
    ((0.15, 0.15), (0.25, 0.0), (0.325, 0.175)),
    ((0.15, 0.15), (0.325, 0.175), (0.175, 0.325)),
    ((0.175, 0.325), (0.325, 0.175), (0.35, 0.35)),
    ((0.175, 0.325), (0.35, 0.35), (0.25, 0.5)),
    ((0.25, 0.0), (0.5, 0.0), (0.325, 0.175)),
    ((0.25, 0.5), (0.35, 0.35), (0.5, 0.5)),
    ((0.325, 0.175), (0.5, 0.0), (0.5, 0.25)),
    ((0.325, 0.175), (0.5, 0.25), (0.35, 0.35)),
    ((0.35, 0.35), (0.5, 0.25), (0.5, 0.5)),
)


def _coarse_triangles() -> tuple[np.ndarray, np.ndarray]:
    index: dict[tuple[float, float], int] = {}
    tris = []
    for dx in (0.0, 0.5):
        for dy in (0.0, 0.5):
            tri = []
            for tri_pts in _TILE_TRIANGLES:
                ids = []
                for x, y in tri_pts:
                    key = (round(x + dx, 12), round(y + dy, 12))
                    ids.append(index.setdefault(key, len(index)))
                tri.append(ids)
            tris.extend(tri)
    verts = np.array(sorted(index, key=index.get))
    return verts, np.array(tris, dtype=np.intp)


def _refine(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split every triangle into four similar ones through edge midpoints."""
    nv = len(verts)
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e.sort(axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mids = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    nt = len(tris)
    m01, m12, m20 = (nv + inv[i * nt : (i + 1) * nt] for i in range(3))
    a, b, c = tris.T
    new = np.concatenate(
        [
            np.column_stack([a, m01, m20]),
            np.column_stack([m01, b, m12]),
            np.column_stack([m20, m12, c]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.vstack([verts, mids]), new


def generate_triangular(
    level: int, dirichlet: Callable[[np.ndarray], bool] | None = None
) -> PrimalMesh:
    """Acute triangulation of the unit square with size ``0.25 / 2**level``.

    Cell points are circumcenters, which lie strictly inside acute triangles,
    so every interior edge is orthogonal to its center line.
    """
    if int(level) < 0:
        raise MeshError("level must be non-negative")
    verts, tris = _coarse_triangles()
    for _ in range(int(level)):
        verts, tris = _refine(verts, tris)
    P = verts[tris]
    centers = np.array([circumcenter(*p) for p in P])
    mesh = PrimalMesh.from_polygons(
        verts, tris, centers, dirichlet=dirichlet, meta={"family": "triangular", "level": int(level)}
    )
    if not mesh.admissible:
        raise MeshError("triangular mesh lost orthogonality")
    return mesh


def generate_distorted_quad(
    n: int, amplitude: float, dirichlet: Callable[[np.ndarray], bool] | None = None
) -> PrimalMesh:
    """Smoothly distorted ``n`` by ``n`` quadrilateral grid of the unit square.

    Interior vertices move by at most ``amplitude * h`` along a fixed pattern
    that has no mirror symmetry in ``x``; boundary vertices stay put. Cell
    points are vertex averages, so the mesh is generally not TPFA-admissible.
    """
    if int(n) < 2:
        raise MeshError("n must be at least 2")
    if not 0.0 <= amplitude < 0.5:
        raise MeshError("amplitude must lie in [0, 0.5)")
    base = generate_cartesian(n, n)
    h = 1.0 / n
    v = base.vertices.copy()
    x, y = v[:, 0], v[:, 1]
    inner = (x > 1e-12) & (x < 1 - 1e-12) & (y > 1e-12) & (y < 1 - 1e-12)
    dx = np.sin(np.pi * x) ** 2 * np.sin(2 * np.pi * y) + 0.5 * np.sin(3 * np.pi * x) * np.sin(np.pi * y)
    dy = np.sin(2 * np.pi * x + 0.7) * np.sin(np.pi * y) ** 2
    scale = amplitude * h / np.sqrt(2.0)
    v[inner, 0] += scale * np.clip(dx[inner], -1.0, 1.0)
    v[inner, 1] += scale * np.clip(dy[inner], -1.0, 1.0)
    centers = np.array([v[list(c)].mean(axis=0) for c in base.cells])
    return PrimalMesh.from_polygons(
        v, base.cells, centers, dirichlet=dirichlet,
        meta={"family": "distorted_quad", "n": int(n), "amplitude": float(amplitude)},
    )


# ------------------------------------------------------------------ file format
def export_mesh(mesh: PrimalMesh, path: str | Path | None = None) -> str:
    """Serialize to the ``fvmesh 1`` text format; writes ``path`` if given."""
    out = ["fvmesh 1", f"vertices {mesh.n_vertices}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    out.append(f"cells {mesh.n_cells}")
    for loop, (cx, cy) in zip(mesh.cells, mesh.centers.tolist()):
        out.append(" ".join([str(len(loop)), *map(str, loop), repr(cx), repr(cy)]))
    bnd = mesh.boundary
    out.append(f"boundary {len(bnd)}")
    for s in bnd:
        tag = "dirichlet" if mesh.edge_kind[s] == EdgeKind.DIRICHLET else "neumann"
        out.append(f"{mesh.edges[s, 0]} {mesh.edges[s, 1]} {tag}")
    text = "\n".join(out) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def parse_mesh(text: str, source: str = "<string>") -> PrimalMesh:
    """Parse the ``fvmesh 1`` text format.

    Layout::

        fvmesh 1
        vertices N        # then N lines "x y"
        cells M           # then M lines "k v1 ... vk [cx cy]"
        boundary B        # then B lines "v1 v2 dirichlet|neumann"

    ``#`` starts a comment. Untagged boundary edges are Neumann.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    it = iter(rows)

    def fail(lineno: int, msg: str) -> MeshError:
        return MeshError(f"{source}:{lineno}: {msg}")

    def header(word: str) -> tuple[int, int]:
        try:
            lineno, tok = next(it)
        except StopIteration:
            raise MeshError(f"{source}: missing '{word}' section") from None
        if len(tok) != 2 or tok[0] != word:
            raise fail(lineno, f"expected '{word} <count>'")
        try:
            return lineno, int(tok[1])
        except ValueError:
            raise fail(lineno, f"bad count {tok[1]!r}") from None

    try:
        lineno, tok = next(it)
    except StopIteration:
        raise MeshError(f"{source}: empty mesh file") from None
    if tok != ["fvmesh", "1"]:
        raise fail(lineno, "expected header 'fvmesh 1'")

    _, nv = header("vertices")
    verts = np.empty((nv, 2))
    for i in range(nv):
        lineno, tok = next(it, (None, None))
        if tok is None:
            raise MeshError(f"{source}: file ends inside vertices section")
        try:
            verts[i] = [float(tok[0]), float(tok[1])]
            if len(tok) != 2:
                raise ValueError
        except (ValueError, IndexError):
            raise fail(lineno, "expected 'x y'") from None

    _, nc = header("cells")
    cells, centers = [], []
    explicit = None
    for c in range(nc):
        lineno, tok = next(it, (None, None))
        if tok is None:
            raise MeshError(f"{source}: file ends inside cells section")
        try:
            k = int(tok[0])
            loop = [int(t) for t in tok[1 : 1 + k]]
            rest = tok[1 + k :]
            if len(loop) != k or len(rest) not in (0, 2):
                raise ValueError
        except (ValueError, IndexError):
            raise fail(lineno, "expected 'k v1 ... vk [cx cy]'") from None
        missing = [v for v in loop if not 0 <= v < nv]
        if missing:
            raise fail(lineno, f"cell {c} references missing vertex {missing[0]}")
        has_center = len(rest) == 2
        if explicit is None:
            explicit = has_center
        elif explicit != has_center:
            raise fail(lineno, "either all or no cells must give explicit centers")
        cells.append(loop)
        if has_center:
            centers.append([float(rest[0]), float(rest[1])])

    tags: dict[tuple[int, int], EdgeKind] = {}
    section = next(it, None)
    if section is not None:
        lineno, tok = section
        if len(tok) != 2 or tok[0] != "boundary":
            raise fail(lineno, "expected 'boundary <count>'")
        for _ in range(int(tok[1])):
            lineno, tok = next(it, (None, None))
            if tok is None:
                raise MeshError(f"{source}: file ends inside boundary section")
            if len(tok) != 3 or tok[2] not in ("dirichlet", "neumann"):
                raise fail(lineno, "expected 'v1 v2 dirichlet|neumann'")
            a, b = int(tok[0]), int(tok[1])
            tags[(min(a, b), max(a, b))] = EdgeKind.DIRICHLET if tok[2] == "dirichlet" else EdgeKind.NEUMANN
    extra = next(it, None)
    if extra is not None:
        raise fail(extra[0], "unexpected trailing content")

    try:
        mesh = PrimalMesh.from_polygons(
            verts, cells, np.array(centers) if explicit else None, boundary_tags=tags,
            meta={"family": "file", "source": source},
        )
    except MeshError as err:
        raise MeshError(f"{source}: {err}") from None
    unknown = [key for key in tags if key not in {tuple(e) for e in mesh.edges[mesh.boundary]}]
    if unknown:
        raise MeshError(f"{source}: boundary tag {unknown[0]} is not a boundary edge")
    return mesh


def import_mesh(path: str | Path) -> PrimalMesh:
    path = Path(path)
    return parse_mesh(path.read_text(), source=str(path))


# ------------------------------------------------------------------ quadrature
def _triangle_rule(points: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric nodes and weights (summing to 1) on a triangle."""
    if points == 1:
        return np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0])
    if points == 3:
        nodes = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
        return nodes, np.full(3, 1 / 3)
    if points == 7:
        # degree-5 Radon rule
        s15 = np.sqrt(15.0)
        a1, b1 = (6 - s15) / 21, (9 + 2 * s15) / 21
        a2, b2 = (6 + s15) / 21, (9 - 2 * s15) / 21
        w1, w2 = (155 - s15) / 1200, (155 + s15) / 1200
        nodes = np.array(
            [[1 / 3, 1 / 3, 1 / 3],
             [b1, a1, a1], [a1, b1, a1], [a1, a1, b1],
             [b2, a2, a2], [a2, b2, a2], [a2, a2, b2]]
        )
        return nodes, np.array([9 / 40, w1, w1, w1, w2, w2, w2])
    raise ValueError("quadrature must use 1, 3 or 7 points")


def triangles_average(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tri: np.ndarray,
    owner: np.ndarray,
    n_owners: int,
    points: int = 3,
) -> np.ndarray:
    """Average of ``f(x, y)`` over unions of triangles.

    ``tri`` has shape (nt, 3, 2); triangle ``t`` belongs to region ``owner[t]``.
    """
    nodes, weights = _triangle_rule(points)
    pts = np.einsum("qk,tkd->tqd", nodes, tri)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    e1, e2 = tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    integral = np.bincount(owner, weights=area * (vals @ weights), minlength=n_owners)
    measure = np.bincount(owner, weights=area, minlength=n_owners)
    return integral / measure


def cell_averages(
    mesh: PrimalMesh, f: Callable[[np.ndarray, np.ndarray], np.ndarray], points: int = 1
) -> np.ndarray:
    """Cell averages of ``f``; ``points=1`` evaluates at each polygon centroid.

    Higher rules integrate over the fan from the polygon centroid.
    """
    if points == 1:
        c = np.array([polygon_centroid(mesh.cell_polygon(k)) for k in range(mesh.n_cells)])
        return np.asarray(f(c[:, 0], c[:, 1]), dtype=float)
    tris, owner = [], []
    for k, loop in enumerate(mesh.cells):
        P = mesh.vertices[list(loop)]
        g = polygon_centroid(P)
        for i in range(len(loop)):
            tris.append([g, P[i], P[(i + 1) % len(loop)]])
            owner.append(k)
    return triangles_average(f, np.array(tris), np.array(owner), mesh.n_cells, points)
