"""Stahel-Donoho outlyingness and the weighted (robust) correlation built on it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._io import make_rng

MAD_CONSISTENCY = 1.4826
WEIGHT_CUTOFF = 2.4477  # sqrt of the 0.95 quantile of chi-square with 2 dof
MAX_PAIR_DIRECTIONS = 250
MAD_FLOOR = 1e-12
MEAN_AD_CONSISTENCY = float(np.sqrt(np.pi / 2))  # sigma / E|X - mu| under normality


@dataclass(frozen=True)
class SDConfig:
    mad_consistency: float = MAD_CONSISTENCY
    cutoff: float = WEIGHT_CUTOFF
    max_pairs: int = MAX_PAIR_DIRECTIONS
    weight: str = "huber"  # "huber": min(1, (cutoff/r)^2); "hard": 1 if r <= cutoff else 0
    # one reweighting step: hard rejection on Mahalanobis distance under the
    # initial weighted estimate, same cutoff
    reweight: bool = True


DEFAULT_CONFIG = SDConfig()


def sd_outlyingness(points, directions, mad_consistency: float = MAD_CONSISTENCY) -> np.ndarray:
    """Worst-case robust z-score of each point over the projection directions.

    Directions whose projected MAD is negligible relative to the projected
    spread are skipped. If every direction is skipped (more than half the
    points coincide in projection) the scale falls back to the mean absolute
    deviation, made normal-consistent; scores are 0 only if that vanishes too.
    """
    Z = np.asarray(points, dtype=float)
    if Z.ndim != 2 or len(Z) < 3:
        raise ValueError("sd_outlyingness needs at least 3 points")
    A = np.asarray(directions, dtype=float).reshape(-1, Z.shape[1])
    proj = Z @ A.T  # (n, k)
    med = np.median(proj, axis=0)
    dev = np.abs(proj - med)
    mad = np.median(dev, axis=0)
    scale = np.max(np.abs(proj), axis=0)
    ok = mad > MAD_FLOOR * scale
    if ok.any():
        return np.max(dev[:, ok] / (mad_consistency * mad[ok]), axis=1)
    mean_dev = dev.mean(axis=0)
    ok = mean_dev > MAD_FLOOR * scale
    if not ok.any():
        return np.zeros(len(Z))
    return np.max(dev[:, ok] / (MEAN_AD_CONSISTENCY * mean_dev[ok]), axis=1)


def pair_directions(points, seed: int, max_pairs: int = MAX_PAIR_DIRECTIONS) -> np.ndarray:
    """Unit normals of lines through point pairs (all pairs, or a seeded subsample)."""
    Z = np.asarray(points, dtype=float)
    n = len(Z)
    i, j = np.triu_indices(n, 1)
    if len(i) > max_pairs:
        pick = np.sort(make_rng(seed).choice(len(i), size=max_pairs, replace=False))
        i, j = i[pick], j[pick]
    d = Z[j] - Z[i]
    normals = np.column_stack([-d[:, 1], d[:, 0]])
    length = np.hypot(normals[:, 0], normals[:, 1])
    keep = length > 0
    return normals[keep] / length[keep, None]


def sd_directions(points, seed: int, max_pairs: int = MAX_PAIR_DIRECTIONS) -> np.ndarray:
    axes = np.eye(2)
    return np.vstack([axes, pair_directions(points, seed, max_pairs)])


def sd_weights(r: np.ndarray, config: SDConfig = DEFAULT_CONFIG) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if config.weight == "huber":
        with np.errstate(divide="ignore"):
            return np.where(r > 0, np.minimum(1.0, (config.cutoff / np.where(r > 0, r, 1.0)) ** 2), 1.0)
    if config.weight == "hard":
        return (r <= config.cutoff).astype(float)
    raise ValueError(f"unknown weight function {config.weight!r}")


def weighted_moments(Z: np.ndarray, w: np.ndarray):
    """Weighted mean and (population) covariance; None if the weights sum to 0."""
    sw = w.sum()
    if sw <= 0:
        return None
    mu = (w @ Z) / sw
    D = Z - mu
    return mu, (D * w[:, None]).T @ D / sw


def _corr(S: np.ndarray) -> float | None:
    if S[0, 0] <= 0 or S[1, 1] <= 0:
        return None
    return float(min(1.0, max(-1.0, S[0, 1] / np.sqrt(S[0, 0] * S[1, 1]))))


def weighted_correlation(x, y, w) -> float | None:
    m = weighted_moments(np.column_stack([x, y]).astype(float), np.asarray(w, dtype=float))
    return None if m is None else _corr(m[1])


def mahalanobis(Z: np.ndarray, mu: np.ndarray, S: np.ndarray) -> np.ndarray:
    D = Z - mu
    return np.sqrt(np.maximum(np.einsum("ij,ij->i", D @ np.linalg.inv(S), D), 0.0))


def sd_correlation(pairs, seed: int = 0, config: SDConfig = DEFAULT_CONFIG) -> float | None:
    """Robust correlation of (x, y) pairs; rows containing None/NaN are dropped.

    Returns None when fewer than 3 pairs remain or a weighted variance is 0.
    A perfectly (anti)correlated initial estimate is returned without
    reweighting, since its scatter matrix is singular.
    """
    arr = _finite_pairs(pairs)
    if len(arr) < 3:
        return None
    dirs = sd_directions(arr, seed, config.max_pairs)
    r = sd_outlyingness(arr, dirs, config.mad_consistency)
    m = weighted_moments(arr, sd_weights(r, config))
    if m is None:
        return None
    mu, S = m
    rho = _corr(S)
    if rho is None or not config.reweight or abs(rho) >= 1.0 - 1e-9:
        return rho
    keep = (mahalanobis(arr, mu, S) <= config.cutoff).astype(float)
    m2 = weighted_moments(arr, keep)
    rho2 = None if m2 is None else _corr(m2[1])
    return rho if rho2 is None else rho2


def _finite_pairs(pairs) -> np.ndarray:
    rows = []
    for x, y in pairs:
        if x is None or y is None:
            continue
        x, y = float(x), float(y)
        if np.isfinite(x) and np.isfinite(y):
            rows.append((x, y))
    return np.array(rows, dtype=float).reshape(-1, 2)


def pearson(x, y) -> float:
    return float(np.corrcoef(x, y)[0, 1])
