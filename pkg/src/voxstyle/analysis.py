"""Embedding-space analysis: PCA projection, cluster separation scoring,
and the voicing statistic used to verify that converted speech lost its
harmonic structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioBuffer
from .validation import as_float_matrix


@dataclass(frozen=True)
class PcaModel:
    """Mean + orthonormal components + per-component variances (descending)."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    def __post_init__(self):
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(len(self.components)), atol=1e-8):
            raise ValueError("components are not orthonormal within 1e-8")
        ev = self.explained_variance
        if np.any(ev < -1e-12) or np.any(np.diff(ev) > 1e-12):
            raise ValueError("explained variances must be nonnegative and nonincreasing")

    @property
    def explained_ratio(self) -> np.ndarray:
        if self.total_variance <= 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance


def pca_fit(data: np.ndarray, k: int) -> PcaModel:
    """Eigendecomposition of the sample covariance (ddof=1), top-k components.

    Sign convention: each component's largest-magnitude entry is positive,
    which makes results deterministic across LAPACK builds.
    """
    x = as_float_matrix(data, "data")
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} out of range [1, {min(n, d)}]")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.maximum(evals[order][:k], 0.0)
    comps = evecs[:, order[:k]].T
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=comps, explained_variance=evals,
                    total_variance=float(np.trace(cov)))


def pca_project(model: PcaModel, data: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(as_float_matrix(data, "data"))
    if x.shape[1] != len(model.mean):
        raise ValueError(
            f"data dim {x.shape[1]} does not match model dim {len(model.mean)}")
    return (x - model.mean) @ model.components.T


class StylePca(BaseEstimator, TransformerMixin):
    """Estimator facade over pca_fit/pca_project."""

    def __init__(self, n_components=2):
        self.n_components = n_components

    def fit(self, X, y=None):
        self.model_ = pca_fit(X, self.n_components)
        return self

    def transform(self, X):
        if not hasattr(self, "model_"):
            raise ValueError("StylePca is not fitted; call fit() first")
        return pca_project(self.model_, X)


@dataclass(frozen=True)
class ClusterReport:
    """Silhouette plus the pairwise distances between per-label centroids."""

    silhouette: float
    labels: tuple
    centroid_distances: dict

    def __post_init__(self):
        if not -1.0 <= self.silhouette <= 1.0:
            raise ValueError(f"silhouette {self.silhouette} outside [-1, 1]")


def _distance_matrix(points: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        diff = points[:, None, :] - points[None, :, :]
        return np.sqrt((diff ** 2).sum(axis=2))
    if metric == "cosine":
        norms = np.maximum(np.linalg.norm(points, axis=1), 1e-300)
        unit = points / norms[:, None]
        return 1.0 - np.clip(unit @ unit.T, -1.0, 1.0)
    raise ValueError(f"unknown metric {metric!r}, expected 'euclidean' or 'cosine'")


def silhouette(points: np.ndarray, labels, metric: str = "euclidean") -> ClusterReport:
    """Mean silhouette score over points, with singleton clusters scored 0.

    Per point: a = mean distance to its own cluster's other members,
    b = smallest mean distance to any other cluster, score (b-a)/max(a,b)
    (0 when a = b = 0).
    """
    x = as_float_matrix(points, "points")
    labels = list(labels)
    if len(labels) != len(x):
        raise ValueError(f"{len(labels)} labels for {len(x)} points")
    unique = sorted(set(labels))
    if len(unique) < 2:
        raise ValueError("silhouette needs at least 2 distinct labels")

    dist = _distance_matrix(x, metric)
    idx = {lab: np.array([i for i, l in enumerate(labels) if l == lab]) for lab in unique}
    scores = np.empty(len(x))
    for i, lab in enumerate(labels):
        own = idx[lab]
        if len(own) == 1:
            scores[i] = 0.0
            continue
        a = dist[i, own].sum() / (len(own) - 1)
        b = min(dist[i, idx[other]].mean() for other in unique if other != lab)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom

    centroids = {lab: x[idx[lab]].mean(axis=0) for lab in unique}
    pair_dist = {}
    for i, la in enumerate(unique):
        for lb in unique[i + 1:]:
            pair = np.vstack([centroids[la], centroids[lb]])
            pair_dist[(la, lb)] = float(_distance_matrix(pair, metric)[0, 1])
    return ClusterReport(silhouette=float(scores.mean()), labels=tuple(unique),
                         centroid_distances=pair_dist)


def voicing_ratio(buffer: AudioBuffer, f0_lo: float = 60.0, f0_hi: float = 400.0) -> float:
    """Peak normalized cross-correlation in the pitch-lag range, in [0, 1].

    The mean-removed signal is cut into 40 ms windows; within each, the
    maximum over lags in [fs/f0_hi, fs/f0_lo] of
    sum(x[n] x[n+tau]) / sqrt(sum x[n]^2 * sum x[n+tau]^2) is taken and the
    window maxima are averaged. Near 1 for periodic signals, small for
    noise-like ones.
    """
    if not 0 < f0_lo < f0_hi:
        raise ValueError("need 0 < f0_lo < f0_hi")
    fs = buffer.sample_rate
    n = len(buffer)
    min_len = int(np.ceil(2 * fs / f0_lo))
    if n < min_len:
        raise ValueError(f"input too short: {n} samples, need at least {min_len}")

    x = buffer.samples - buffer.samples.mean()
    lag_lo = max(1, int(round(fs / f0_hi)))
    lag_hi = int(round(fs / f0_lo))
    win = int(round(0.040 * fs))
    if n < win + lag_hi:
        win = n - lag_hi  # single shortened window; preconditions keep win >= lag_hi

    peaks = []
    for start in range(0, n - win - lag_hi + 1, win):
        seg = x[start: start + win]
        e0 = float(seg @ seg)
        if e0 == 0.0:
            peaks.append(0.0)
            continue
        best = 0.0
        for lag in range(lag_lo, lag_hi + 1):
            lagged = x[start + lag: start + lag + win]
            e1 = float(lagged @ lagged)
            if e1 == 0.0:
                continue
            rho = float(seg @ lagged) / np.sqrt(e0 * e1)
            if rho > best:
                best = rho
        peaks.append(best)
    if not peaks:
        return 0.0
    return float(np.clip(np.mean(peaks), 0.0, 1.0))


def projections_to_csv(records, path) -> None:
    """records: iterable of (utterance_id, style, projection vector)."""
    rows = list(records)
    if not rows:
        raise ValueError("no projection records to write")
    k = len(np.asarray(rows[0][2]))
    header = "utterance_id,style," + ",".join(f"pc{i + 1}" for i in range(k))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for utt, style, vec in rows:
            vals = ",".join(repr(float(v)) for v in np.asarray(vec))
            fh.write(f"{utt},{style},{vals}\n")
