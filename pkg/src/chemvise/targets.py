"""Analyte representation spaces used as regression targets.

Three geometries: semantic (clustered, loaded from CSV or synthesized),
one-hot basis vectors, and the regular simplex on the unit hypersphere
(the unique exactly-equidistant construction for n <= d + 1 points).
Mixture targets are convex combinations weighted by relative
concentration.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, ConfigError, ParseError, UnknownAnalyteError
from .signals import AnalyteMix
from .util import fmt

KINDS = ("semantic", "one_hot", "simplex")


@dataclass(frozen=True)
class TargetSpace:
    """Map from analyte id to a d-dimensional target vector."""

    dimension: int
    kind: str
    vectors: dict[str, np.ndarray]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")
        vecs = {}
        for name, v in self.vectors.items():
            arr = np.asarray(v, dtype=np.float64)
            if arr.shape != (self.dimension,):
                raise ConfigError(
                    f"vector for {name!r} has shape {arr.shape}, expected ({self.dimension},)")
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"vector for {name!r} has non-finite entries")
            vecs[str(name)] = arr
        object.__setattr__(self, "vectors", vecs)

    @property
    def analyte_ids(self) -> tuple[str, ...]:
        return tuple(self.vectors.keys())

    def vector(self, analyte_id: str) -> np.ndarray:
        try:
            return self.vectors[analyte_id]
        except KeyError:
            raise UnknownAnalyteError(
                f"analyte {analyte_id!r} not in target space {self.analyte_ids}") from None

    def matrix(self, analyte_ids=None) -> np.ndarray:
        ids = analyte_ids if analyte_ids is not None else self.analyte_ids
        return np.stack([self.vector(a) for a in ids])


def build_one_hot(analytes, dimension: int) -> TargetSpace:
    """Analyte k (enumeration order) maps to standard basis vector e_k."""
    analytes = list(analytes)
    if len(set(analytes)) != len(analytes):
        raise ConfigError(f"duplicate analytes: {analytes}")
    if len(analytes) > dimension:
        raise CapacityError(
            f"{len(analytes)} analytes need at least {len(analytes)} dimensions, got {dimension}")
    vectors = {}
    for k, a in enumerate(analytes):
        v = np.zeros(dimension)
        v[k] = 1.0
        vectors[a] = v
    return TargetSpace(dimension=dimension, kind="one_hot", vectors=vectors)


def _random_orthogonal(dimension: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish orthogonal matrix via QR with a deterministic sign fix."""
    m = rng.standard_normal((dimension, dimension))
    q, r = np.linalg.qr(m)
    return q * np.sign(np.diag(r))[None, :]


def build_simplex(analytes, dimension: int, seed: int) -> TargetSpace:
    """n unit vectors forming a regular simplex centered at the origin.

    Pairwise inner products are all -1/(n-1). Coordinates are built in the
    first n-1 axes and then rotated by a seeded random orthogonal
    transform so no axis alignment is special.
    """
    analytes = list(analytes)
    n = len(analytes)
    if len(set(analytes)) != n:
        raise ConfigError(f"duplicate analytes: {analytes}")
    if n > dimension + 1:
        raise CapacityError(
            f"a regular simplex of {n} points needs dimension >= {n - 1}, got {dimension}")

    if n == 1:
        coords = np.ones((1, 1))
        base_dim = 1
    else:
        # Centered unit-norm simplex: rows of sqrt(n/(n-1)) * (I - J/n),
        # expressed in an orthonormal basis of the hyperplane orthogonal to 1.
        centered = np.sqrt(n / (n - 1.0)) * (np.eye(n) - np.full((n, n), 1.0 / n))
        q, _ = np.linalg.qr(centered.T)
        basis = q[:, :n - 1]
        coords = centered @ basis
        base_dim = n - 1

    embedded = np.zeros((n, dimension))
    embedded[:, :base_dim] = coords
    rot = _random_orthogonal(dimension, np.random.default_rng(int(seed)))
    points = embedded @ rot.T
    vectors = {a: points[i] for i, a in enumerate(analytes)}
    return TargetSpace(dimension=dimension, kind="simplex", vectors=vectors)


def gen_synthetic_semantic(analytes, dimension: int, n_clusters: int,
                           cluster_spread: float, seed: int) -> TargetSpace:
    """Clustered stand-in for a pretrained chemistry embedding space.

    Cluster centroids are orthonormal (seeded QR); each analyte vector is
    the unit-normalized centroid plus gaussian jitter of scale
    cluster_spread. Analyte i joins cluster min(i, n_clusters - 1):
    leading analytes get dedicated clusters and the tail pools in the
    last one, so with the target analyte listed first and two clusters
    the geometry is target-versus-family-of-obscurants.
    """
    analytes = list(analytes)
    if len(set(analytes)) != len(analytes):
        raise ConfigError(f"duplicate analytes: {analytes}")
    if not 1 <= n_clusters <= len(analytes):
        raise ConfigError(
            f"n_clusters must be in [1, {len(analytes)}], got {n_clusters}")
    if n_clusters > dimension:
        raise CapacityError("more clusters than dimensions")
    if cluster_spread < 0:
        raise ConfigError("cluster_spread must be >= 0")

    rng = np.random.default_rng(int(seed))
    q, r = np.linalg.qr(rng.standard_normal((dimension, n_clusters)))
    centroids = (q * np.sign(np.diag(r))[None, :]).T   # [n_clusters x d]

    vectors = {}
    for i, a in enumerate(analytes):
        c = centroids[min(i, n_clusters - 1)]
        v = c + cluster_spread * rng.standard_normal(dimension) if cluster_spread > 0 else c.copy()
        vectors[a] = v / np.linalg.norm(v)
    return TargetSpace(dimension=dimension, kind="semantic", vectors=vectors)


def mixture_target(space: TargetSpace, mix: AnalyteMix) -> np.ndarray:
    """Target vector for a mix: the analyte's own vector for singles, and
    lam*y_a + (1-lam)*y_b with lam = c_a/(c_a + c_b) for doubles."""
    comps = mix.components
    if len(comps) == 1:
        return space.vector(comps[0][0]).copy()
    (a, ca), (b, cb) = comps
    lam = ca / (ca + cb)
    return lam * space.vector(a) + (1.0 - lam) * space.vector(b)


def save_semantic(space: TargetSpace, path) -> None:
    """Write the embedding CSV: header analyte_id, v0..v{d-1}; one row per analyte."""
    path = Path(path)
    d = space.dimension
    lines = ["analyte_id," + ",".join(f"v{i}" for i in range(d))]
    for a in space.analyte_ids:
        lines.append(a + "," + ",".join(fmt(x) for x in space.vector(a)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_semantic(path) -> TargetSpace:
    """Load an embedding CSV as a semantic target space.

    Ragged rows, non-numeric cells, and duplicate analyte ids raise
    ParseError naming the line number (1-based, header is line 1).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise ParseError(f"{path}: empty embedding file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "analyte_id" or len(header) < 2:
        raise ParseError(f"{path}: line 1: expected header 'analyte_id, v0, ...'")
    d = len(header) - 1
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 1:
            raise ParseError(
                f"{path}: line {lineno}: expected {d + 1} cells, got {len(cells)}")
        analyte = cells[0].strip()
        if analyte in vectors:
            raise ParseError(f"{path}: line {lineno}: duplicate analyte {analyte!r}")
        try:
            vec = np.array([float(c) for c in cells[1:]])
        except ValueError as e:
            raise ParseError(f"{path}: line {lineno}: non-numeric cell ({e})") from None
        vectors[analyte] = vec
    return TargetSpace(dimension=d, kind="semantic", vectors=vectors)
