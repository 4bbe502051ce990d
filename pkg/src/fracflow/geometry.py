"""Meshes, fracture descriptions, conformity checking and interface splitting.

Fractures are lower-dimensional objects (polylines in 2D, points in 1D) that
must coincide with mesh edges/vertices. ``split_mesh`` duplicates the mesh
vertices along each fracture so the two sides carry independent degrees of
freedom, labels the resulting subdomains, and records the interface entities
the assembly stage needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ConformityError, GeometryError, UnsupportedTopologyError

__all__ = [
    "Point",
    "ConstantAperture",
    "EllipticalAperture",
    "FractureSpec",
    "FractureNetwork",
    "Mesh",
    "InterfaceEdge",
    "InterfacePoint",
    "SplitMesh",
    "build_structured_quad",
    "build_interval",
    "check_conformity",
    "split_mesh",
]


@dataclass(frozen=True)
class Point:
    """A point in 1D (``y is None``) or 2D."""

    x: float
    y: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.x):
            raise GeometryError(f"non-finite point coordinate x={self.x!r}")
        if self.y is not None and not np.isfinite(self.y):
            raise GeometryError(f"non-finite point coordinate y={self.y!r}")

    @property
    def dim(self) -> int:
        return 1 if self.y is None else 2

    @property
    def coords(self) -> tuple[float, ...]:
        return (self.x,) if self.y is None else (self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class ConstantAperture:
    """Uniform fracture aperture."""

    value: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value > 0.0):
            raise GeometryError(f"aperture must be positive, got {self.value!r}")

    def __call__(self, point: Point) -> float:
        return self.value

    @property
    def max_value(self) -> float:
        return self.value


@dataclass(frozen=True)
class EllipticalAperture:
    """Aperture profile of a flat elliptical inclusion.

    ``major`` is the full extent along the fracture, ``minor`` the maximal
    opening (at the center). The width at distance d from the center is
    ``minor * sqrt(1 - (d / (major/2))**2)``, clamped to zero outside.
    """

    center: Point
    major: float
    minor: float

    def __post_init__(self):
        if not (np.isfinite(self.major) and self.major > 0.0):
            raise GeometryError(f"major axis must be positive, got {self.major!r}")
        if not (np.isfinite(self.minor) and self.minor > 0.0):
            raise GeometryError(f"minor axis must be positive, got {self.minor!r}")

    def __call__(self, point: Point) -> float:
        d = np.linalg.norm(point.as_array() - self.center.as_array())
        ratio = d / (0.5 * self.major)
        if ratio >= 1.0:
            return 0.0
        return self.minor * float(np.sqrt(1.0 - ratio * ratio))

    @property
    def max_value(self) -> float:
        return self.minor


Aperture = Union[ConstantAperture, EllipticalAperture]


@dataclass(frozen=True)
class FractureSpec:
    """One fracture: its geometry, aperture profile and tangential mobility.

    In 2D the path is a polyline with at least two points; in a 1D mesh a
    fracture is a single point, given as a one-point path.
    """

    path: tuple[Point, ...]
    aperture: Aperture
    mobility: float

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(self.path))
        if len(self.path) == 0:
            raise GeometryError("fracture path is empty")
        dims = {p.dim for p in self.path}
        if len(dims) != 1:
            raise GeometryError("fracture path mixes 1D and 2D points")
        if self.dim == 2 and len(self.path) < 2:
            raise GeometryError("2D fracture path needs at least two points")
        if self.dim == 1 and len(self.path) != 1:
            raise GeometryError("1D fracture is a single point")
        for a, b in zip(self.path[:-1], self.path[1:]):
            if a.coords == b.coords:
                raise GeometryError("fracture path repeats a point")
        if not (np.isfinite(self.mobility) and self.mobility > 0.0):
            raise GeometryError(f"fracture mobility must be positive, got {self.mobility!r}")

    @property
    def dim(self) -> int:
        return self.path[0].dim


@dataclass(frozen=True)
class FractureNetwork:
    """A collection of fractures sharing one ambient dimension."""

    fractures: tuple[FractureSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "fractures", tuple(self.fractures))
        dims = {f.dim for f in self.fractures}
        if len(dims) > 1:
            raise GeometryError("fracture network mixes dimensions")

    def __len__(self) -> int:
        return len(self.fractures)

    def __iter__(self):
        return iter(self.fractures)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mesh:
    """Conforming mesh: segments in 1D, quadrilaterals (CCW) in 2D.

    ``boundary_facets`` pairs vertex-index tuples with a tag string; each
    facet must be owned by exactly one cell.
    """

    vertices: np.ndarray
    cells: np.ndarray
    boundary_facets: tuple[tuple[tuple[int, ...], str], ...]

    def __post_init__(self):
        verts = _readonly(np.asarray(self.vertices, dtype=float))
        cells = _readonly(np.asarray(self.cells, dtype=np.int64))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "boundary_facets", tuple(
            (tuple(int(v) for v in vs), str(tag)) for vs, tag in self.boundary_facets
        ))
        if verts.ndim != 2 or verts.shape[1] not in (1, 2):
            raise GeometryError(f"vertex array must be (n, 1) or (n, 2), got {verts.shape}")
        if not np.all(np.isfinite(verts)):
            raise GeometryError("mesh has non-finite vertex coordinates")
        want = 2 if verts.shape[1] == 1 else 4
        if cells.ndim != 2 or cells.shape[1] != want:
            raise GeometryError(f"cell array must be (n, {want}) for dim {verts.shape[1]}")
        if cells.size and (cells.min() < 0 or cells.max() >= len(verts)):
            raise GeometryError("cell references a vertex out of range")
        if verts.shape[1] == 2 and len(cells):
            x = verts[cells, 0]
            y = verts[cells, 1]
            area = 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)
            if np.any(area <= 0.0):
                bad = int(np.argmax(area <= 0.0))
                raise GeometryError(f"cell {bad} is degenerate or not counter-clockwise")
        for vs, _tag in self.boundary_facets:
            nfv = 1 if verts.shape[1] == 1 else 2
            if len(vs) != nfv:
                raise GeometryError(f"boundary facet {vs} has wrong arity for dim {self.dim}")
            if any(v < 0 or v >= len(verts) for v in vs):
                raise GeometryError(f"boundary facet {vs} references a vertex out of range")

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def diameter(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def boundary_tags(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for _vs, tag in self.boundary_facets:
            seen.setdefault(tag, None)
        return tuple(seen)


@dataclass(frozen=True)
class InterfaceEdge:
    """One mesh edge on a 2D fracture, after splitting.

    ``node_pairs = ((a1, a2), (b1, b2))`` are the duplicated vertex ids of
    the edge endpoints; index 1 is the side-1 copy (lower subdomain id, ties
    broken by lower cell id). ``eta`` is the unit normal pointing from side 1
    into side 2.
    """

    fracture_id: int
    node_pairs: tuple[tuple[int, int], tuple[int, int]]
    eta: tuple[float, float]
    length: float
    endpoints: tuple[Point, Point]
    aperture_at_nodes: tuple[float, float]


@dataclass(frozen=True)
class InterfacePoint:
    """The 1D counterpart of InterfaceEdge: a single duplicated vertex.

    ``node_pair = (left, right)`` with side 1 the lower subdomain id (the
    left side); ``eta`` is +1, pointing from side 1 into side 2.
    """

    fracture_id: int
    node_pair: tuple[int, int]
    location: Point
    aperture: float
    eta: float = 1.0


@dataclass(frozen=True)
class SplitMesh:
    """A mesh whose fracture vertices have been duplicated per side.

    ``base`` holds the duplicated vertex set; ``vertex_origin[v]`` maps each
    vertex back to the pre-split vertex it was copied from (identity for
    untouched vertices). Degrees of freedom are the vertices of ``base``.
    """

    base: Mesh
    subdomain_of_cell: np.ndarray
    n_subdomains: int
    interface_edges: tuple
    vertex_origin: np.ndarray
    network: FractureNetwork

    def __post_init__(self):
        object.__setattr__(self, "subdomain_of_cell", _readonly(np.asarray(self.subdomain_of_cell, dtype=np.int64)))
        object.__setattr__(self, "vertex_origin", _readonly(np.asarray(self.vertex_origin, dtype=np.int64)))
        object.__setattr__(self, "interface_edges", tuple(self.interface_edges))

    @property
    def n_dofs(self) -> int:
        return self.base.n_vertices

    def copies_of(self, origin_vertex: int) -> np.ndarray:
        """All post-split vertex ids that stem from one pre-split vertex."""
        return np.nonzero(self.vertex_origin == origin_vertex)[0]

    def edges_of_fracture(self, fracture_id: int) -> tuple:
        return tuple(e for e in self.interface_edges if e.fracture_id == fracture_id)

    def subdomain_of_vertex(self) -> np.ndarray:
        """Subdomain id of each dof (every copy is used by one side only)."""
        sub = np.full(self.n_dofs, -1, dtype=np.int64)
        for c, cell in enumerate(self.base.cells):
            sub[cell] = self.subdomain_of_cell[c]
        return sub


def build_structured_quad(nx: int, ny: int, lower: Point, upper: Point) -> Mesh:
    """Tensor-product quadrilateral mesh on an axis-aligned rectangle.

    Vertices are numbered row-major (x fastest); cells are counter-clockwise.
    Boundary facets get the tags left/right/bottom/top.
    """
    if nx < 1 or ny < 1:
        raise GeometryError(f"need at least one cell per direction, got nx={nx}, ny={ny}")
    if lower.dim != 2 or upper.dim != 2:
        raise GeometryError("corner points must be 2D")
    if not (upper.x > lower.x and upper.y > lower.y):
        raise GeometryError("upper corner must dominate lower corner")

    xs = np.linspace(lower.x, upper.x, nx + 1)
    ys = np.linspace(lower.y, upper.y, ny + 1)
    return _tensor_quad_mesh(xs, ys)


def _tensor_quad_mesh(xs: np.ndarray, ys: np.ndarray) -> Mesh:
    """Quad mesh from explicit strictly increasing grid lines."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or len(ys) < 2 or np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise GeometryError("grid lines must be strictly increasing with >= 2 entries")
    nx = len(xs) - 1
    ny = len(ys) - 1
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    i = np.arange(nx)
    j = np.arange(ny)
    I, J = np.meshgrid(i, j)
    v00 = vid(I, J).ravel()
    v10 = vid(I + 1, J).ravel()
    v11 = vid(I + 1, J + 1).ravel()
    v01 = vid(I, J + 1).ravel()
    cells = np.column_stack([v00, v10, v11, v01])

    facets: list[tuple[tuple[int, int], str]] = []
    for ii in range(nx):
        facets.append(((vid(ii, 0), vid(ii + 1, 0)), "bottom"))
    for ii in range(nx):
        facets.append(((vid(ii, ny), vid(ii + 1, ny)), "top"))
    for jj in range(ny):
        facets.append(((vid(0, jj), vid(0, jj + 1)), "left"))
    for jj in range(ny):
        facets.append(((vid(nx, jj), vid(nx, jj + 1)), "right"))
    return Mesh(vertices=vertices, cells=cells, boundary_facets=tuple(facets))


def build_interval(n: int, length: float) -> Mesh:
    """Uniform 1D mesh of ``n`` segments on [0, length]."""
    if n < 1:
        raise GeometryError(f"need at least one cell, got n={n}")
    if not (np.isfinite(length) and length > 0.0):
        raise GeometryError(f"length must be positive, got {length!r}")
    vertices = np.linspace(0.0, length, n + 1).reshape(-1, 1)
    cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    facets = (((0,), "left"), ((n,), "right"))
    return Mesh(vertices=vertices, cells=cells, boundary_facets=facets)


_QUAD_EDGE_LOCAL = np.array([[0, 1], [1, 2], [2, 3], [3, 0]], dtype=np.int64)


class _EdgeTable:
    """Unique undirected edges of a quad mesh with cell incidence."""

    def __init__(self, mesh: Mesh):
        cells = mesh.cells
        nv = mesh.n_vertices
        pairs = cells[:, _QUAD_EDGE_LOCAL].reshape(-1, 2)
        lo = pairs.min(axis=1)
        hi = pairs.max(axis=1)
        codes_all = lo * nv + hi
        owner = np.repeat(np.arange(len(cells), dtype=np.int64), 4)
        order = np.argsort(codes_all, kind="stable")
        sorted_codes = codes_all[order]
        self._nv = nv
        self.codes, first = np.unique(sorted_codes, return_index=True)
        self.offsets = np.append(first, len(sorted_codes))
        self.cells_flat = owner[order]

    def edge_id(self, a: int, b: int) -> int:
        """Index of undirected edge (a, b), or -1 if absent."""
        lo, hi = (a, b) if a < b else (b, a)
        code = lo * self._nv + hi
        idx = int(np.searchsorted(self.codes, code))
        if idx < len(self.codes) and self.codes[idx] == code:
            return idx
        return -1

    def cells_of(self, edge_id: int) -> np.ndarray:
        return self.cells_flat[self.offsets[edge_id]:self.offsets[edge_id + 1]]

    @property
    def n_edges(self) -> int:
        return len(self.codes)

    def incidence_counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def _default_tol(mesh: Mesh) -> float:
    return 1e-12 * max(mesh.diameter(), 1.0)


def check_conformity(mesh: Mesh, network: FractureNetwork, tol: float | None = None):
    """Match each fracture path to a chain of mesh entities.

    Returns one entry per fracture: in 2D an ordered list of vertex-index
    pairs (the mesh edges along the path, oriented along it), in 1D a
    one-element list with the matched vertex id. Raises ConformityError if
    any portion of a path fails to coincide with mesh edges/vertices.
    """
    if tol is None:
        tol = _default_tol(mesh)
    for f in network:
        if f.dim != mesh.dim:
            raise GeometryError(f"fracture dimension {f.dim} does not match mesh dimension {mesh.dim}")

    if mesh.dim == 1:
        chains = []
        coords = mesh.vertices[:, 0]
        for j, frac in enumerate(network):
            s = frac.path[0].x
            hits = np.nonzero(np.abs(coords - s) <= tol)[0]
            if len(hits) == 0:
                raise ConformityError(f"fracture {j}: no mesh vertex at x={s}")
            chains.append([int(hits[0])])
        return chains

    table = _EdgeTable(mesh)
    verts = mesh.vertices
    chains = []
    for j, frac in enumerate(network):
        edges: list[tuple[int, int]] = []
        prev_end: int | None = None
        for k, (p, q) in enumerate(zip(frac.path[:-1], frac.path[1:])):
            pa = p.as_array()
            qa = q.as_array()
            seg = qa - pa
            seg_len = float(np.linalg.norm(seg))
            if seg_len <= tol:
                raise GeometryError(f"fracture {j}: degenerate path segment {k}")
            that = seg / seg_len
            t = (verts - pa) @ that
            tc = np.clip(t, 0.0, seg_len)
            closest = pa + tc[:, None] * that
            dist = np.linalg.norm(verts - closest, axis=1)
            on = np.nonzero(dist <= tol)[0]
            if len(on) < 2:
                raise ConformityError(
                    f"fracture {j}, segment {k}: path does not follow mesh vertices"
                )
            order = on[np.argsort(t[on], kind="stable")]
            if np.linalg.norm(verts[order[0]] - pa) > tol:
                raise ConformityError(
                    f"fracture {j}, segment {k}: start point {tuple(pa)} is not a mesh vertex"
                )
            if np.linalg.norm(verts[order[-1]] - qa) > tol:
                raise ConformityError(
                    f"fracture {j}, segment {k}: end point {tuple(qa)} is not a mesh vertex"
                )
            if prev_end is not None and int(order[0]) != prev_end:
                raise ConformityError(
                    f"fracture {j}: path segments {k - 1} and {k} do not share a mesh vertex"
                )
            for va, vb in zip(order[:-1], order[1:]):
                if table.edge_id(int(va), int(vb)) < 0:
                    raise ConformityError(
                        f"fracture {j}, segment {k}: no mesh edge between vertices "
                        f"{int(va)} and {int(vb)}; the path crosses cell interiors"
                    )
                edges.append((int(va), int(vb)))
            prev_end = int(order[-1])
        chains.append(edges)
    return chains


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def split_mesh(mesh: Mesh, network: FractureNetwork, tol: float | None = None) -> SplitMesh:
    """Duplicate fracture vertices per side and label subdomains.

    Every vertex on a fracture path is duplicated once per incident corner
    group: the incident cells, connected to each other around the vertex
    through non-fracture edges. A vertex interior to a single fracture gets
    two copies, a crossing of two fractures up to four. The copy attached to
    the group containing the lowest cell id keeps the original vertex id;
    further copies are appended in deterministic order.

    Raises UnsupportedTopologyError for a fracture tip that lies strictly
    inside a subdomain (touching neither the domain boundary nor another
    fracture), for fractures running along the domain boundary, and for
    overlapping fractures.
    """
    if tol is None:
        tol = _default_tol(mesh)
    chains = check_conformity(mesh, network, tol)
    if mesh.dim == 1:
        return _split_mesh_1d(mesh, network, chains)
    return _split_mesh_2d(mesh, network, chains)


def _split_mesh_1d(mesh: Mesh, network: FractureNetwork, chains) -> SplitMesh:
    n_cells = mesh.n_cells
    fr_vertex_of: dict[int, int] = {}
    for j, chain in enumerate(chains):
        v = chain[0]
        if v in fr_vertex_of:
            raise UnsupportedTopologyError(f"fractures {fr_vertex_of[v]} and {j} coincide at vertex {v}")
        fr_vertex_of[v] = j

    vertex_cells: dict[int, list[int]] = {}
    for c, cell in enumerate(mesh.cells):
        for v in cell:
            vertex_cells.setdefault(int(v), []).append(c)
    for v in fr_vertex_of:
        if len(vertex_cells.get(v, ())) != 2:
            raise UnsupportedTopologyError(f"1D fracture vertex {v} must be interior to the mesh")

    # Flood fill over cells; shared non-fracture vertices connect neighbours.
    rows, cols = [], []
    for v, cs in vertex_cells.items():
        if v in fr_vertex_of or len(cs) != 2:
            continue
        rows.append(cs[0])
        cols.append(cs[1])
    subdomain = _labels_first_encounter(n_cells, rows, cols)
    n_sub = int(subdomain.max()) + 1 if n_cells else 0

    coords = [mesh.vertices[i].copy() for i in range(mesh.n_vertices)]
    origin = list(range(mesh.n_vertices))
    cells = mesh.cells.copy()
    points: list[InterfacePoint] = []
    for j, chain in enumerate(chains):
        v = chain[0]
        left, right = sorted(vertex_cells[v])
        new_id = len(coords)
        coords.append(mesh.vertices[v].copy())
        origin.append(v)
        # The right cell gets the new copy; left keeps the original id.
        pos = np.nonzero(cells[right] == v)[0][0]
        cells[right, pos] = new_id
        if subdomain[left] >= subdomain[right]:
            raise UnsupportedTopologyError("1D subdomain ordering violated")
        frac = network.fractures[j]
        loc = Point(float(mesh.vertices[v, 0]))
        points.append(InterfacePoint(
            fracture_id=j,
            node_pair=(v, new_id),
            location=loc,
            aperture=float(frac.aperture(loc)),
        ))

    base = Mesh(vertices=np.asarray(coords), cells=cells, boundary_facets=mesh.boundary_facets)
    return SplitMesh(
        base=base,
        subdomain_of_cell=subdomain,
        n_subdomains=n_sub,
        interface_edges=tuple(points),
        vertex_origin=np.asarray(origin, dtype=np.int64),
        network=network,
    )


def _labels_first_encounter(n: int, rows, cols) -> np.ndarray:
    """Connected-component labels, renumbered by first occurrence in id order."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _count, raw = connected_components(graph, directed=False)
    _uniq, first = np.unique(raw, return_index=True)
    # Rank the components by the smallest member id.
    rank = np.empty(len(_uniq), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(_uniq))
    return rank[raw].astype(np.int64)


def _split_mesh_2d(mesh: Mesh, network: FractureNetwork, chains) -> SplitMesh:
    table = _EdgeTable(mesh)
    cells = mesh.cells
    n_cells = mesh.n_cells

    # Which edges are fractures; reject overlaps and boundary-glued fractures.
    fracture_of_edge: dict[int, int] = {}
    for j, chain in enumerate(chains):
        for va, vb in chain:
            eid = table.edge_id(va, vb)
            if eid in fracture_of_edge:
                raise UnsupportedTopologyError(
                    f"fractures {fracture_of_edge[eid]} and {j} overlap on edge ({va}, {vb})"
                )
            if len(table.cells_of(eid)) != 2:
                raise UnsupportedTopologyError(
                    f"fracture {j} runs along the domain boundary at edge ({va}, {vb})"
                )
            fracture_of_edge[eid] = j

    counts = table.incidence_counts()
    boundary_vertex = np.zeros(mesh.n_vertices, dtype=bool)
    boundary_edge_ids = np.nonzero(counts == 1)[0]
    nv = mesh.n_vertices
    for eid in boundary_edge_ids:
        code = int(table.codes[eid])
        boundary_vertex[code // nv] = True
        boundary_vertex[code % nv] = True

    # Fracture tips must rest on the boundary or on another fracture edge.
    fr_edge_degree: dict[int, int] = {}
    for eid in fracture_of_edge:
        code = int(table.codes[eid])
        for v in (code // nv, code % nv):
            fr_edge_degree[v] = fr_edge_degree.get(v, 0) + 1
    for j, chain in enumerate(chains):
        for tip in (chain[0][0], chain[-1][1]):
            if fr_edge_degree.get(tip, 0) <= 1 and not boundary_vertex[tip]:
                raise UnsupportedTopologyError(
                    f"fracture {j} terminates inside a subdomain at vertex {tip}"
                )

    # Subdomains: flood fill over cells joined by non-fracture edges.
    rows, cols = [], []
    interior = np.nonzero(counts == 2)[0]
    starts = table.offsets[interior]
    pair_a = table.cells_flat[starts]
    pair_b = table.cells_flat[starts + 1]
    keep = np.ones(len(interior), dtype=bool)
    if fracture_of_edge:
        fr_ids = np.fromiter(fracture_of_edge.keys(), dtype=np.int64)
        keep = ~np.isin(interior, fr_ids)
    rows = pair_a[keep]
    cols = pair_b[keep]
    subdomain = _labels_first_encounter(n_cells, rows, cols)
    n_sub = int(subdomain.max()) + 1 if n_cells else 0

    # Corner groups around each fracture vertex.
    fr_verts = sorted({v for chain in chains for e in chain for v in e})
    fr_vert_set = set(fr_verts)
    vertex_cells: dict[int, list[int]] = {v: [] for v in fr_verts}
    if fr_verts:
        mask = np.isin(cells, np.asarray(fr_verts)).any(axis=1)
        for c in np.nonzero(mask)[0]:
            for v in cells[c]:
                if int(v) in fr_vert_set:
                    vertex_cells[int(v)].append(int(c))

    new_coords: list[np.ndarray] = []
    origin_extra: list[int] = []
    replace: dict[tuple[int, int], int] = {}
    next_id = mesh.n_vertices
    groups_at: dict[int, list[list[int]]] = {}
    for v in fr_verts:
        incident = vertex_cells[v]
        uf = _UnionFind(incident)
        for c in incident:
            ring = cells[c]
            pos = int(np.nonzero(ring == v)[0][0])
            for w in (int(ring[pos - 1]), int(ring[(pos + 1) % 4])):
                eid = table.edge_id(v, w)
                if eid in fracture_of_edge:
                    continue
                flanking = table.cells_of(eid)
                if len(flanking) == 2:
                    uf.union(int(flanking[0]), int(flanking[1]))
        comp: dict[int, list[int]] = {}
        for c in incident:
            comp.setdefault(uf.find(c), []).append(c)
        groups = sorted(comp.values(), key=min)
        if len(groups) < 2:
            raise UnsupportedTopologyError(
                f"fracture vertex {v} does not separate its neighbourhood"
            )
        groups_at[v] = groups
        for gi, grp in enumerate(groups):
            if gi == 0:
                continue
            vid = next_id
            next_id += 1
            new_coords.append(mesh.vertices[v].copy())
            origin_extra.append(v)
            for c in grp:
                replace[(c, v)] = vid

    new_cells = cells.copy()
    for (c, v), vid in replace.items():
        pos = int(np.nonzero(cells[c] == v)[0][0])
        new_cells[c, pos] = vid

    def copy_of(v: int, c: int) -> int:
        return replace.get((c, v), v)

    # Boundary facets follow their owning cell's copies.
    facets = []
    for vs, tag in mesh.boundary_facets:
        a, b = vs
        eid = table.edge_id(a, b)
        owners = table.cells_of(eid) if eid >= 0 else np.empty(0, dtype=np.int64)
        if eid < 0 or len(owners) != 1:
            raise GeometryError(f"boundary facet {vs} is not owned by exactly one cell")
        c = int(owners[0])
        facets.append(((copy_of(a, c), copy_of(b, c)), tag))

    vertices = mesh.vertices if not new_coords else np.vstack([mesh.vertices, np.asarray(new_coords)])
    base = Mesh(vertices=vertices, cells=new_cells, boundary_facets=tuple(facets))
    vertex_origin = np.concatenate([
        np.arange(mesh.n_vertices, dtype=np.int64),
        np.asarray(origin_extra, dtype=np.int64),
    ]) if origin_extra else np.arange(mesh.n_vertices, dtype=np.int64)

    centroids = mesh.vertices[cells].mean(axis=1)
    edges: list[InterfaceEdge] = []
    for j, chain in enumerate(chains):
        frac = network.fractures[j]
        for va, vb in chain:
            eid = table.edge_id(va, vb)
            c1, c2 = (int(c) for c in table.cells_of(eid))
            key1 = (int(subdomain[c1]), c1)
            key2 = (int(subdomain[c2]), c2)
            if key2 < key1:
                c1, c2 = c2, c1
            pa = mesh.vertices[va]
            pb = mesh.vertices[vb]
            tangent = pb - pa
            length = float(np.linalg.norm(tangent))
            normal = np.array([-tangent[1], tangent[0]]) / length
            if float(normal @ (centroids[c2] - centroids[c1])) < 0.0:
                normal = -normal
            ea = Point(float(pa[0]), float(pa[1]))
            eb = Point(float(pb[0]), float(pb[1]))
            edges.append(InterfaceEdge(
                fracture_id=j,
                node_pairs=(
                    (copy_of(va, c1), copy_of(va, c2)),
                    (copy_of(vb, c1), copy_of(vb, c2)),
                ),
                eta=(float(normal[0]), float(normal[1])),
                length=length,
                endpoints=(ea, eb),
                aperture_at_nodes=(float(frac.aperture(ea)), float(frac.aperture(eb))),
            ))

    return SplitMesh(
        base=base,
        subdomain_of_cell=subdomain,
        n_subdomains=n_sub,
        interface_edges=tuple(edges),
        vertex_origin=vertex_origin,
        network=network,
    )
