"""Undirected weighted graphs, the Laplacian spectrum, and the two projections
(frequency-band filtering and node sampling) every filter in this package is
built on.

All types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

SYMMETRY_TOL = 1e-12
EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph: symmetric nonnegative adjacency, no self-loops.

    ``coords`` are optional planar node positions (used by k-NN construction
    and kept for plotting / export).
    """

    adjacency: np.ndarray
    coords: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {a.shape}")
        if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("adjacency must be symmetric within 1e-12")
        if np.any(np.diag(a) != 0.0):
            raise ValueError("adjacency must have a zero diagonal (no self-loops)")
        if np.any(a < 0.0):
            raise ValueError("edge weights must be nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        if self.coords is not None:
            c = np.asarray(self.coords, dtype=float)
            if c.shape != (a.shape[0], 2):
                raise ValueError(f"coords must be ({a.shape[0]}, 2), got {c.shape}")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def degrees(self) -> np.ndarray:
        """Weighted degree of each node (row sums of the adjacency)."""
        return self.adjacency.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        """Combinatorial Laplacian, degree matrix minus adjacency."""
        return np.diag(self.degrees()) - self.adjacency

    def is_connected(self) -> bool:
        ncomp, _ = connected_components(csr_matrix(self.adjacency), directed=False)
        return ncomp == 1


@dataclass(frozen=True, eq=False)
class LaplacianEigensystem:
    """Full spectrum of a graph Laplacian.

    ``eigenvalues`` ascend; ``eigenvectors`` holds the matching orthonormal
    columns. Column signs are pinned (first entry with magnitude above 1e-8
    is positive) so repeated decompositions are bit-identical.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        for name in ("eigenvalues", "eigenvectors"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


@dataclass(frozen=True, eq=False)
class BandlimitOperator:
    """Orthogonal projector onto the span of a chosen set of Laplacian modes."""

    freq_set: tuple[int, ...]
    u_f: np.ndarray  # n x |F| selected eigenvector columns

    def __post_init__(self):
        u = np.asarray(self.u_f, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u_f", u)
        object.__setattr__(self, "freq_set", tuple(int(i) for i in self.freq_set))

    @property
    def n(self) -> int:
        return self.u_f.shape[0]

    @property
    def bandwidth(self) -> int:
        return len(self.freq_set)

    @cached_property
    def b(self) -> np.ndarray:
        """Dense projector (materialized once, on first use)."""
        mat = self.u_f @ self.u_f.T
        mat.setflags(write=False)
        return mat

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.u_f @ (self.u_f.T @ x)


@dataclass(frozen=True, eq=False)
class SamplingOperator:
    """Diagonal 0/1 projector that keeps the observed nodes and zeroes the rest."""

    sample_set: tuple[int, ...]
    n: int

    def __post_init__(self):
        s = tuple(int(i) for i in self.sample_set)
        if any(i < 0 or i >= self.n for i in s):
            raise ValueError("sample_set indices out of range")
        if len(set(s)) != len(s):
            raise ValueError("sample_set has duplicates")
        object.__setattr__(self, "sample_set", s)

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n)
        m[list(self.sample_set)] = 1.0
        m.setflags(write=False)
        return m

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Zero every entry outside the sample set; dims must match on axis 0."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise ValueError(f"signal has {x.shape[0]} nodes, operator expects {self.n}")
        if x.ndim == 1:
            return self.mask * x
        return self.mask[:, None] * x


def apply_sampling(ds: SamplingOperator, x: np.ndarray) -> np.ndarray:
    return ds.apply(x)


def build_knn_graph(coords: np.ndarray, k: int, kernel_scale: float) -> Graph:
    """k-nearest-neighbor graph with Gaussian edge weights.

    Node i links to its k nearest neighbors by Euclidean distance; an edge is
    kept if either endpoint selected it (union symmetrization). Edge weight is
    exp(-d^2 / (2 * kernel_scale^2)).
    """
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValueError("coords must be an (n, 2) array")
    if k < 1 or k >= n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if kernel_scale <= 0:
        raise ValueError("kernel_scale must be positive")

    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    off_diag = ~np.eye(n, dtype=bool)
    if np.min(dist[off_diag]) == 0.0:
        raise ValueError("coords contain duplicate points")

    adjacency = np.zeros((n, n))
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        neighbors = [j for j in order if j != i][:k]
        for j in neighbors:
            w = np.exp(-dist[i, j] ** 2 / (2.0 * kernel_scale**2))
            adjacency[i, j] = w
            adjacency[j, i] = w
    return Graph(adjacency=adjacency, coords=coords)


def mean_knn_distance(coords: np.ndarray, k: int) -> float:
    """Mean distance from each node to its k nearest neighbors; the default
    kernel scale for k-NN graphs built from scattered positions."""
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, np.inf)
    nearest = np.sort(dist, axis=1)[:, :k]
    return float(nearest.mean())


def random_sensor_graph(n: int, k: int, seed: int, max_attempts: int = 100) -> Graph:
    """Random sensor-style test graph: n uniform points on the unit square,
    k-NN edges, kernel scale set to the mean k-NN distance.

    Deterministic given the seed. Disconnected draws are rejected and the
    seed incremented, so the returned graph always has a usable spectrum.
    """
    if k >= n:
        raise ValueError(f"need k < n, got k={k}, n={n}")
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        coords = rng.random((n, 2))
        scale = mean_knn_distance(coords, k)
        graph = build_knn_graph(coords, k, scale)
        if graph.is_connected():
            return graph
    raise ValueError(f"no connected graph in {max_attempts} attempts from seed {seed}")


def eigensystem(graph: Graph) -> LaplacianEigensystem:
    """Symmetric eigendecomposition of the Laplacian, ascending eigenvalues.

    Each eigenvector's sign is fixed so that its first entry of magnitude
    above 1e-8 is positive, making the decomposition reproducible.
    """
    lap = graph.laplacian()
    if np.max(np.abs(lap - lap.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("Laplacian is not symmetric")
    eigenvalues, eigenvectors = np.linalg.eigh(lap)
    eigenvectors = _fix_signs(eigenvectors)
    return LaplacianEigensystem(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def _fix_signs(u: np.ndarray) -> np.ndarray:
    u = u.copy()
    for j in range(u.shape[1]):
        col = u[:, j]
        big = np.nonzero(np.abs(col) > 1e-8)[0]
        if big.size and col[big[0]] < 0:
            u[:, j] = -col
    return u


def gft(es: LaplacianEigensystem, x: np.ndarray) -> np.ndarray:
    """Spectral coefficients of a node signal: projection onto the eigenbasis."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != es.n:
        raise ValueError(f"signal has {x.shape[0]} nodes, eigensystem has {es.n}")
    return es.eigenvectors.T @ x


def igft(es: LaplacianEigensystem, s: np.ndarray) -> np.ndarray:
    """Node signal from spectral coefficients (inverse of :func:`gft`)."""
    s = np.asarray(s, dtype=float)
    if s.shape[0] != es.n:
        raise ValueError(f"spectrum has {s.shape[0]} entries, eigensystem has {es.n}")
    return es.eigenvectors @ s


def bandlimit(es: LaplacianEigensystem, freq_set) -> BandlimitOperator:
    """Projector onto the eigenvector columns named by ``freq_set``."""
    freq_set = tuple(int(i) for i in freq_set)
    if not freq_set:
        raise ValueError("freq_set must be nonempty")
    if len(set(freq_set)) != len(freq_set):
        raise ValueError("freq_set has duplicates")
    if any(i < 0 or i >= es.n for i in freq_set):
        raise ValueError("freq_set index out of range")
    u_f = es.eigenvectors[:, list(freq_set)].copy()
    return BandlimitOperator(freq_set=freq_set, u_f=u_f)


def planar_from_latlon(latlon: np.ndarray) -> np.ndarray:
    """Equirectangular projection of (lat, lon) degree pairs to kilometers.

    Adequate for single-region station networks; longitude is scaled by the
    cosine of the mean latitude.
    """
    latlon = np.asarray(latlon, dtype=float)
    lat0 = np.deg2rad(latlon[:, 0].mean())
    x = EARTH_RADIUS_KM * np.deg2rad(latlon[:, 1]) * np.cos(lat0)
    y = EARTH_RADIUS_KM * np.deg2rad(latlon[:, 0])
    return np.column_stack([x, y])


def save_graph_csv(graph: Graph, edges_path, coords_path=None) -> None:
    """Write the edge list as ``i,j,weight`` (upper triangle only) and,
    optionally, node coordinates as ``node,x,y``."""
    with open(edges_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "weight"])
        rows, cols = np.nonzero(np.triu(graph.adjacency))
        for i, j in zip(rows, cols):
            writer.writerow([int(i), int(j), f"{graph.adjacency[i, j]:.17g}"])
    if coords_path is not None:
        if graph.coords is None:
            raise ValueError("graph has no coordinates to save")
        with open(coords_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "x", "y"])
            for i, (x, y) in enumerate(graph.coords):
                writer.writerow([i, f"{x:.17g}", f"{y:.17g}"])


def load_graph_csv(edges_path, coords_path=None) -> Graph:
    """Read a graph from an ``i,j,weight`` edge list (header mandatory).

    Single-direction edges are mirrored; if both directions appear their
    weights must agree within 1e-12.
    """
    entries: dict[tuple[int, int], float] = {}
    n = 0
    with open(edges_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["i", "j", "weight"]:
            raise ValueError(f"{edges_path}: expected header 'i,j,weight'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                i, j, w = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{edges_path}:{lineno}: bad edge row {row!r}") from exc
            if i == j:
                raise ValueError(f"{edges_path}:{lineno}: self-loop on node {i}")
            if w < 0:
                raise ValueError(f"{edges_path}:{lineno}: negative weight")
            key = (i, j)
            if key in entries and abs(entries[key] - w) > SYMMETRY_TOL:
                raise ValueError(f"{edges_path}:{lineno}: conflicting weight for edge {key}")
            entries[key] = w
            n = max(n, i + 1, j + 1)

    coords = None
    if coords_path is not None:
        coords_rows = {}
        with open(coords_path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:3]] != ["node", "x", "y"]:
                raise ValueError(f"{coords_path}: expected header 'node,x,y'")
            for row in reader:
                if not row:
                    continue
                coords_rows[int(row[0])] = (float(row[1]), float(row[2]))
        n = max(n, max(coords_rows, default=-1) + 1)
        coords = np.zeros((n, 2))
        for i in range(n):
            if i not in coords_rows:
                raise ValueError(f"{coords_path}: missing coordinates for node {i}")
            coords[i] = coords_rows[i]

    adjacency = np.zeros((n, n))
    for (i, j), w in entries.items():
        mirrored = entries.get((j, i))
        if mirrored is not None and abs(mirrored - w) > SYMMETRY_TOL:
            raise ValueError(f"asymmetric weights for edge ({i}, {j})")
        adjacency[i, j] = w
        adjacency[j, i] = w
    return Graph(adjacency=adjacency, coords=coords)
