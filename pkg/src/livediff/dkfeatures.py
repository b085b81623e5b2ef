"""Kernel-matrix features over reduced frame vectors.

A clip becomes a d x n matrix (one flattened frame per column), its rows
are projected to a small number of principal directions, and the feature
is the RBF kernel matrix between those reduced rows. The kernel is taken
between feature rows rather than samples, so the output size depends only
on the reduced dimension, never on the frame count, and clips of any
length yield directly comparable descriptors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionConfig, diffuse
from .errors import DimensionMismatch, InsufficientSamples
from .imaging import Clip

DEFAULT_LOWD = 32


@dataclass(frozen=True)
class FeatureMatrix:
    """Real d x n matrix; row i is one feature observed across n columns."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Reducer:
    """PCA projection fitted on pooled training columns; immutable once built."""

    input_dim: int
    output_dim: int
    mean: np.ndarray
    projection: np.ndarray  # output_dim x input_dim, orthonormal rows
    fingerprint: str
    kind: str = "pca"

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        proj = np.asarray(self.projection, dtype=np.float64)
        if mean.shape != (self.input_dim,):
            raise ValueError(f"mean has length {mean.shape[0]}, expected {self.input_dim}")
        if proj.shape != (self.output_dim, self.input_dim):
            raise ValueError(
                f"projection is {proj.shape}, expected {(self.output_dim, self.input_dim)}"
            )
        gram = proj @ proj.T
        if not np.allclose(gram, np.eye(self.output_dim), atol=1e-8):
            raise ValueError("projection rows are not orthonormal")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "projection", proj)


@dataclass(frozen=True)
class DKFeature:
    """Symmetric RBF kernel matrix over reduced rows, with the gamma used."""

    matrix: np.ndarray
    gamma: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"kernel matrix must be square, got shape {m.shape}")
        if not np.all(np.abs(m - m.T) <= 1e-10):
            raise ValueError("kernel matrix is not symmetric")
        if not np.all(np.diagonal(m) == 1.0):
            raise ValueError("kernel matrix diagonal must be exactly 1")
        object.__setattr__(self, "matrix", m)

    @property
    def lowd(self) -> int:
        return self.matrix.shape[0]

    @property
    def flat(self) -> np.ndarray:
        """Row-major flattening of the full matrix, length lowd**2."""
        return self.matrix.ravel().copy()


def clip_to_matrix(clip: Clip) -> FeatureMatrix:
    """Stack the clip's frames as columns: d = width*height, n = frame count."""
    columns = [f.pixels.ravel() for f in clip.frames]
    return FeatureMatrix(np.stack(columns, axis=1))


def fit_reducer(training: list[FeatureMatrix], lowd: int) -> Reducer:
    """Fit PCA on pooled training columns.

    Projection rows are the top-lowd principal directions in decreasing
    eigenvalue order. Each direction's sign is fixed so its
    largest-magnitude entry is positive, making the fit deterministic
    given the input order.
    """
    if not training:
        raise InsufficientSamples("no training matrices given")
    d = training[0].d
    for k, m in enumerate(training):
        if m.d != d:
            raise DimensionMismatch(f"matrix {k} has d={m.d}, expected {d}")
    pooled = np.concatenate([m.values for m in training], axis=1)
    if lowd < 1 or lowd > d:
        raise InsufficientSamples(f"lowd={lowd} outside [1, d={d}]")
    if pooled.shape[1] < lowd:
        raise InsufficientSamples(
            f"{pooled.shape[1]} pooled columns cannot support lowd={lowd}"
        )

    mean = pooled.mean(axis=1)
    centered = pooled - mean[:, None]
    u, _, _ = np.linalg.svd(centered, full_matrices=False)
    projection = np.ascontiguousarray(u[:, :lowd].T)
    for row in projection:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return Reducer(
        input_dim=d,
        output_dim=lowd,
        mean=mean,
        projection=projection,
        fingerprint=_fingerprint(training, lowd),
    )


def reduce(m: FeatureMatrix, reducer: Reducer) -> FeatureMatrix:
    """Project centered columns of m through the fitted directions."""
    if m.d != reducer.input_dim:
        raise DimensionMismatch(f"matrix has d={m.d}, reducer expects {reducer.input_dim}")
    return FeatureMatrix(reducer.projection @ (m.values - reducer.mean[:, None]))


def pairwise_sq_dists(m: FeatureMatrix) -> np.ndarray:
    """Squared Euclidean distances between rows via the Gram decomposition.

    ||f_i - f_j||^2 = f_i.f_i - 2 f_i.f_j + f_j.f_j, computed from one
    matrix product, so the cost is O(n * d^2) for d rows of length n.
    Round-off negatives clamp to 0 and the diagonal is exactly 0.
    """
    v = m.values
    gram = v @ v.T
    sq_norms = np.diagonal(gram)
    dists = sq_norms[:, None] + sq_norms[None, :] - 2.0 * gram
    dists = 0.5 * (dists + dists.T)
    np.maximum(dists, 0.0, out=dists)
    np.fill_diagonal(dists, 0.0)
    return dists


def kernel_matrix(m: FeatureMatrix, gamma: float) -> DKFeature:
    """RBF kernel matrix exp(-gamma * ||f_i - f_j||^2) over the rows of m."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return DKFeature(matrix=np.exp(-gamma * pairwise_sq_dists(m)), gamma=gamma)


def median_heuristic_gamma(reduced: list[FeatureMatrix]) -> float:
    """1 / median of the nonzero pairwise row distances, pooled over matrices.

    Falls back to 1/lowd when every pairwise distance is zero.
    """
    if not reduced:
        raise InsufficientSamples("no reduced matrices given")
    pooled: list[np.ndarray] = []
    for m in reduced:
        dists = pairwise_sq_dists(m)
        upper = dists[np.triu_indices(dists.shape[0], k=1)]
        pooled.append(upper[upper > 0.0])
    nonzero = np.concatenate(pooled) if pooled else np.empty(0)
    if nonzero.size == 0:
        return 1.0 / reduced[0].d
    return float(1.0 / np.median(nonzero))


def extract_dk(
    clip: Clip, dcfg: DiffusionConfig, reducer: Reducer, gamma: float
) -> DKFeature:
    """Diffuse every frame, vectorize, reduce, and kernelize one clip."""
    diffused = Clip(
        frames=tuple(diffuse(f, dcfg) for f in clip.frames),
        source_id=clip.source_id,
        label=clip.label,
    )
    return kernel_matrix(reduce(clip_to_matrix(diffused), reducer), gamma)


def _fingerprint(training: list[FeatureMatrix], lowd: int) -> str:
    h = hashlib.sha256()
    h.update(f"pca lowd={lowd} matrices={len(training)}".encode("ascii"))
    for m in training:
        h.update(f" {m.d}x{m.n}:".encode("ascii"))
        h.update(np.ascontiguousarray(m.values).tobytes())
    return h.hexdigest()


REDUCER_VERSION = "livediff-reducer-1"


def save_reducer(path: str, reducer: Reducer) -> None:
    from .featureio import write_json_doc

    write_json_doc(
        path,
        {
            "version": REDUCER_VERSION,
            "kind": reducer.kind,
            "d": reducer.input_dim,
            "lowd": reducer.output_dim,
            "mean": reducer.mean.tolist(),
            "projection": reducer.projection.ravel().tolist(),
            "fingerprint": reducer.fingerprint,
        },
    )


def load_reducer(path: str) -> Reducer:
    from .errors import MalformedFile
    from .featureio import read_json_doc

    doc = read_json_doc(path)
    version = doc.get("version")
    if version != REDUCER_VERSION:
        raise MalformedFile(f"{path}: unsupported reducer version {version!r}")
    d, lowd = int(doc["d"]), int(doc["lowd"])
    projection = np.asarray(doc["projection"], dtype=np.float64).reshape(lowd, d)
    return Reducer(
        input_dim=d,
        output_dim=lowd,
        mean=np.asarray(doc["mean"], dtype=np.float64),
        projection=projection,
        fingerprint=str(doc["fingerprint"]),
        kind=str(doc["kind"]),
    )
