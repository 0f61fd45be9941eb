"""Analysis of learned intent vectors: clustering, 2-D projection, the
cluster-effectiveness experiments, and recovery scoring against known
advertiser archetypes."""

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import model
from . import ndgrad as nd

EXP_CLAMP = 30.0  # matches the kernel sigmoid clamp
_OBJ_TOL = 1e-9


@dataclass
class ClusterModel:
    centers: np.ndarray      # (k, d)
    assignments: np.ndarray  # (n,) int
    inertia: float           # within-cluster sum of squares

    @property
    def k(self):
        return self.centers.shape[0]

    def sizes(self):
        return np.bincount(self.assignments, minlength=self.k)


@dataclass
class PcaModel:
    mean: np.ndarray       # (d,)
    axes: np.ndarray       # (2, d) orthonormal rows
    explained: np.ndarray  # (2,) variance ratios
    degenerate: bool = False


@dataclass
class IntentSample:
    """One advertiser unit seen through the trained model."""

    advertiser_id: int
    w: np.ndarray            # learned intent vector (d,)
    reports_aug: np.ndarray  # (l, n_i + 1) normalized reports plus bias
    label: int


def _sq_dists(points, centers):
    # (n, k) squared distances
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _assign(points, centers):
    return np.argmin(_sq_dists(points, centers), axis=1)


def _objective(points, centers, assignments):
    diff = points - centers[assignments]
    return float(np.einsum("nd,nd->", diff, diff))


def _plus_plus_seed(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total == 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[i] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def _update_centers(points, centers, assignments, k):
    new = centers.copy()
    counts = np.bincount(assignments, minlength=k)
    for c in range(k):
        if counts[c] > 0:
            new[c] = points[assignments == c].mean(axis=0)
    empties = [c for c in range(k) if counts[c] == 0]
    if empties:
        # re-seed each empty cluster to the point farthest from its center
        dist = np.sum((points - new[assignments]) ** 2, axis=1)
        taken = set()
        for c in empties:
            order = np.argsort(-dist, kind="mergesort")
            pick = next(i for i in order if i not in taken)
            new[c] = points[pick]
            taken.add(int(pick))
    return new


def kmeans(points, k, seed=0, max_iter=100):
    points = np.asarray(points, dtype=float)
    if k < 1:
        raise ValueError("k must be at least 1")
    if points.shape[0] < k:
        raise ValueError(f"need at least k={k} points, got {points.shape[0]}")
    rng = np.random.default_rng([seed, 0xC1])
    centers = _plus_plus_seed(points, k, rng)
    assignments = _assign(points, centers)
    obj = _objective(points, centers, assignments)
    for _ in range(max_iter):
        centers = _update_centers(points, centers, assignments, k)
        new_assignments = _assign(points, centers)
        new_obj = _objective(points, centers, new_assignments)
        assert new_obj <= obj + _OBJ_TOL * max(1.0, obj), \
            "clustering objective increased"
        done = bool(np.array_equal(new_assignments, assignments))
        assignments, obj = new_assignments, new_obj
        if done:
            break
    return ClusterModel(centers=centers, assignments=assignments, inertia=obj)


def _power_axis(cov, exclude=None, max_iter=5000, tol=1e-14):
    d = cov.shape[0]
    v = np.ones(d) + 1e-4 * np.arange(d)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        u = cov @ v
        if exclude is not None:
            u -= (u @ exclude) * exclude
        norm = np.linalg.norm(u)
        if norm < 1e-300:
            # null direction: pick any unit vector orthogonal to exclude
            u = np.zeros(d)
            u[0] = 1.0
            if exclude is not None:
                u -= (u @ exclude) * exclude
                if np.linalg.norm(u) < 1e-12:
                    u = np.zeros(d)
                    u[1 % d] = 1.0
                    u -= (u @ exclude) * exclude
            return u / np.linalg.norm(u), 0.0
        u /= norm
        if np.linalg.norm(u - v) < tol or np.linalg.norm(u + v) < tol:
            v = u
            break
        v = u
    lam = float(v @ cov @ v)
    return v, lam


def pca_fit(points):
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    if n < 3:
        raise ValueError("projection needs at least 3 points")
    mean = points.mean(axis=0)
    centered = points - mean
    cov = centered.T @ centered / (n - 1)
    total = float(np.trace(cov))
    v1, lam1 = _power_axis(cov)
    deflated = cov - lam1 * np.outer(v1, v1)
    v2, lam2 = _power_axis(deflated, exclude=v1)
    lam2 = max(lam2, 0.0)
    degenerate = total <= 0.0 or lam2 <= 1e-12 * max(lam1, 1e-300)
    # canonical sign: largest-magnitude entry positive
    for v in (v1, v2):
        i = int(np.argmax(np.abs(v)))
        if v[i] < 0:
            v *= -1.0
    if total <= 0.0:
        explained = np.zeros(2)
    else:
        explained = np.array([lam1 / total, lam2 / total])
    return PcaModel(mean=mean, axes=np.stack([v1, v2]), explained=explained,
                    degenerate=bool(degenerate))


def pca_transform(pca, w):
    w = np.asarray(w, dtype=float)
    return (w - pca.mean) @ pca.axes.T


def head_score(center, reports_aug):
    """Mean sigmoid of per-day scores, numpy mirror of the model head."""
    x = np.clip(reports_aug @ np.asarray(center), -EXP_CLAMP, EXP_CLAMP)
    return float(np.mean(1.0 / (1.0 + np.exp(-x))))


def extract_intents(params, samples, model_config):
    """Run the trained intent stage over encoded samples."""
    out = []
    for enc in samples:
        tape = nd.Tape()
        leaves = model.watch_all(tape, params)
        w = model.intent_vector(leaves, enc, model_config)
        out.append(IntentSample(advertiser_id=enc.advertiser,
                                w=w.data[0].copy(),
                                reports_aug=model.augmented_reports(enc),
                                label=enc.label))
    return out


def _cluster_members(cluster, samples):
    members = [[] for _ in range(cluster.k)]
    for i, s in enumerate(samples):
        members[cluster.assignments[i]].append(s)
    for c, group in enumerate(members):
        if not group:
            raise ValueError(f"cluster {c} has no members")
    return members


def in_cluster_accuracy(cluster, samples):
    """ACC when every sample is scored with its own cluster's center."""
    members = _cluster_members(cluster, samples)
    per_cluster = np.empty(cluster.k)
    correct_total = 0
    for c, group in enumerate(members):
        correct = sum(int((head_score(cluster.centers[c], s.reports_aug) > 0.5)
                          == s.label) for s in group)
        per_cluster[c] = correct / len(group)
        correct_total += correct
    return per_cluster, correct_total / len(samples)


def cross_cluster_accuracy(cluster, samples):
    """Matrix entry (i, j): ACC of cluster-i samples scored with center j."""
    if cluster.k < 2:
        raise ValueError("cross-cluster experiment needs at least 2 clusters")
    members = _cluster_members(cluster, samples)
    matrix = np.empty((cluster.k, cluster.k))
    for i, group in enumerate(members):
        for j in range(cluster.k):
            correct = sum(
                int((head_score(cluster.centers[j], s.reports_aug) > 0.5)
                    == s.label) for s in group)
            matrix[i, j] = correct / len(group)
    return matrix


def cross_cluster_overall(cluster, samples):
    """ACC when each sample is scored with its nearest other-cluster center."""
    if cluster.k < 2:
        raise ValueError("cross-cluster experiment needs at least 2 clusters")
    correct = 0
    for i, s in enumerate(samples):
        own = cluster.assignments[i]
        d2 = np.sum((cluster.centers - s.w) ** 2, axis=1)
        d2[own] = np.inf
        other = int(np.argmin(d2))
        correct += int((head_score(cluster.centers[other], s.reports_aug) > 0.5)
                       == s.label)
    return correct / len(samples)


def nearest_cross_cluster_equal_ratio(cluster, samples, limit=5000, seed=0):
    """Per cluster: fraction of members whose nearest sample in any other
    cluster (Euclidean on w) carries the same label."""
    if cluster.k < 2:
        raise ValueError("nearest-neighbor experiment needs at least 2 clusters")
    _cluster_members(cluster, samples)
    w_all = np.stack([s.w for s in samples])
    labels = np.array([s.label for s in samples])
    assign = cluster.assignments
    rng = np.random.default_rng([seed, 0x4E])
    ratios = np.empty(cluster.k)
    for c in range(cluster.k):
        mine = np.flatnonzero(assign == c)
        others = np.flatnonzero(assign != c)
        if others.size == 0:
            raise ValueError("no samples outside cluster")
        if mine.size > limit:
            mine = np.sort(rng.choice(mine, size=limit, replace=False))
        d2 = _sq_dists(w_all[mine], w_all[others])
        nearest = others[np.argmin(d2, axis=1)]
        ratios[c] = float(np.mean(labels[mine] == labels[nearest]))
    return ratios


def _comb2(x):
    return x * (x - 1) / 2.0


def adjusted_rand_index(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    n = a.shape[0]
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)
    sum_ij = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    total = _comb2(n)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_ij - expected) / (max_index - expected))


def intent_recovery_score(intents, archetype_ids, k, seed=0):
    """Cluster learned intents and score agreement with true archetypes."""
    archetype_ids = np.asarray(archetype_ids)
    points = np.asarray(intents, dtype=float)
    if points.shape[0] != archetype_ids.shape[0]:
        raise ValueError("every intent vector needs an archetype id")
    n_arch = len(np.unique(archetype_ids))
    if k != n_arch:
        warnings.warn(f"clustering k={k} differs from {n_arch} archetypes",
                      stacklevel=2)
    cluster = kmeans(points, k, seed=seed)
    return adjusted_rand_index(cluster.assignments, archetype_ids), cluster


def write_scatter(pos_path, neg_path, pca, cluster, samples):
    """Two CSVs of 2-D projections, split by satisfaction label."""
    rows = {1: [], 0: []}
    for i, s in enumerate(samples):
        p = pca_transform(pca, s.w)
        rows[s.label].append([s.advertiser_id, repr(float(p[0])),
                              repr(float(p[1])), int(cluster.assignments[i]),
                              s.label])
    for path, label in ((pos_path, 1), (neg_path, 0)):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["advertiser_id", "pc1", "pc2", "cluster", "label"])
            writer.writerows(rows[label])


def cluster_report(cluster, samples, limit=5000, seed=0):
    per_cluster, overall = in_cluster_accuracy(cluster, samples)
    matrix = cross_cluster_accuracy(cluster, samples)
    ratios = nearest_cross_cluster_equal_ratio(cluster, samples, limit=limit,
                                               seed=seed)
    return {
        "k": cluster.k,
        "centers": [list(map(float, c)) for c in cluster.centers],
        "sizes": [int(x) for x in cluster.sizes()],
        "inertia": cluster.inertia,
        "in_cluster_acc": [float(x) for x in per_cluster],
        "in_cluster_acc_overall": float(overall),
        "cross_cluster_acc": [[float(x) for x in row] for row in matrix],
        "cross_cluster_acc_overall": float(cross_cluster_overall(cluster,
                                                                 samples)),
        "nearest_equal_ratio": [float(x) for x in ratios],
    }


def write_cluster_report(path, report):
    with open(path, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
