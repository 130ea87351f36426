"""Input-space class balancing: ROS, SMOTE, ADASYN, REMIX and cost-sensitive weights.

Every oversampler returns an :class:`AugmentedDataset` whose original rows
come first, unmodified and with their instance ids, followed by the added
rows. Added rows get fresh ids above the largest input id, and their origin
is recorded in :class:`Provenance` so that support vectors and other
per-instance diagnostics can be traced back to natural or synthetic data.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dataset import Dataset, DatasetError

log = logging.getLogger(__name__)

NATURAL = "natural"
SYNTHETIC = "synthetic"

# rows per distance block in the brute-force neighbour search
_KNN_BLOCK_ELEMS = 1 << 22


class SyntheticProvenance(NamedTuple):
    origin: str
    parent_a: int
    parent_b: Optional[int]
    lam: Optional[float]


@dataclass(frozen=True, eq=False)
class Provenance:
    """Column-wise provenance: one entry per row of the augmented data.

    ``parent_b`` is -1 and ``lam`` is NaN where not applicable.
    """

    synthetic: np.ndarray
    parent_a: np.ndarray
    parent_b: np.ndarray
    lam: np.ndarray

    @classmethod
    def natural(cls, ids) -> "Provenance":
        ids = np.asarray(ids, dtype=np.int64)
        n = ids.size
        return cls(np.zeros(n, bool), ids.copy(), np.full(n, -1, np.int64), np.full(n, np.nan))

    @classmethod
    def concat(cls, parts) -> "Provenance":
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("synthetic", "parent_a", "parent_b", "lam")))

    def __len__(self):
        return self.synthetic.size

    def row(self, i) -> SyntheticProvenance:
        if self.synthetic[i]:
            pb = int(self.parent_b[i])
            return SyntheticProvenance(SYNTHETIC, int(self.parent_a[i]),
                                       pb if pb >= 0 else None, float(self.lam[i]))
        return SyntheticProvenance(NATURAL, int(self.parent_a[i]), None, None)


@dataclass(frozen=True, eq=False)
class AugmentedDataset:
    data: Dataset
    provenance: Provenance
    soft_labels: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.provenance) != self.data.n:
            raise DatasetError("provenance length must equal row count")
        if self.soft_labels is not None:
            s = np.asarray(self.soft_labels, dtype=np.float64)
            if s.shape != (self.data.n, self.data.n_classes):
                raise DatasetError("soft_labels must be n x n_classes")
            if not np.allclose(s.sum(axis=1), 1.0, atol=1e-9):
                raise DatasetError("soft label rows must sum to 1")
            object.__setattr__(self, "soft_labels", s)

    @classmethod
    def from_dataset(cls, data: Dataset, method: str = "base") -> "AugmentedDataset":
        return cls(data, Provenance.natural(data.instance_ids), None, {"method": method})

    @property
    def is_original(self) -> np.ndarray:
        """Rows that are the source instances themselves (not copies)."""
        p = self.provenance
        return ~p.synthetic & (p.parent_a == self.data.instance_ids)


def as_augmented(data) -> AugmentedDataset:
    if isinstance(data, AugmentedDataset):
        return data
    return AugmentedDataset.from_dataset(data)


def _rng(seed):
    return np.random.default_rng(seed)


def _knn(ref: np.ndarray, queries: np.ndarray, k: int, self_rows=None) -> np.ndarray:
    """Indices into ``ref`` of the k nearest rows to each query.

    Distances are squared Euclidean computed from explicit differences, so
    equal distances compare equal and ties go to the lower index.
    ``self_rows[i]`` (if given) is excluded from query i's candidates.
    """
    ref = np.asarray(ref, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    n_ref, dim = ref.shape
    limit = n_ref - (1 if self_rows is not None else 0)
    if k < 1 or k > limit:
        raise ValueError(f"k={k} must be in 1..{limit}")
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    block = max(1, _KNN_BLOCK_ELEMS // max(1, n_ref * dim))
    for start in range(0, queries.shape[0], block):
        q = queries[start:start + block]
        diff = q[:, None, :] - ref[None, :, :]
        dist = np.einsum("ijk,ijk->ij", diff, diff)
        if self_rows is not None:
            dist[np.arange(q.shape[0]), self_rows[start:start + block]] = np.inf
        out[start:start + block] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out


def knn_same_set(points, k: int, exclude_self: bool = True) -> np.ndarray:
    """k nearest neighbours of every row within the same point set."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k >= n:
        raise ValueError(f"k={k} must be smaller than the row count {n}")
    return _knn(points, points, k, np.arange(n) if exclude_self else None)


def _fresh_ids(data: Dataset, count: int) -> np.ndarray:
    start = int(data.instance_ids.max()) + 1 if data.n else 0
    return np.arange(start, start + count, dtype=np.int64)


def _assemble(data: Dataset, new_X, new_y, new_prov: Provenance, method: str,
              soft=None, extra_meta=None) -> AugmentedDataset:
    new_ids = _fresh_ids(data, len(new_y))
    X = np.vstack([data.features, np.asarray(new_X, dtype=np.float64).reshape(-1, data.feature_count)])
    y = np.concatenate([data.labels, np.asarray(new_y, dtype=np.int64)])
    out = Dataset(X, y, np.concatenate([data.instance_ids, new_ids]), data.n_classes,
                  dict(data.metadata))
    prov = Provenance.concat([Provenance.natural(data.instance_ids), new_prov])
    meta = {"method": method}
    meta.update(extra_meta or {})
    return AugmentedDataset(out, prov, soft, meta)


def _check_classes(data: Dataset):
    if data.n_classes < 2:
        raise DatasetError("resampling needs at least 2 classes")


def ros(data: Dataset, seed=0) -> AugmentedDataset:
    """Random over-sampling: duplicate minority rows until every class matches the majority."""
    _check_classes(data)
    rng = _rng(seed)
    counts = data.class_counts()
    target = counts.max()
    src = []
    for c in range(data.n_classes):
        idx = np.flatnonzero(data.labels == c)
        if counts[c] < target:
            src.append(idx[rng.integers(0, idx.size, target - counts[c])])
    src = np.concatenate(src) if src else np.empty(0, np.int64)
    prov = Provenance(np.zeros(src.size, bool), data.instance_ids[src],
                      np.full(src.size, -1, np.int64), np.full(src.size, np.nan))
    return _assemble(data, data.features[src], data.labels[src], prov, "ros")


def _interpolate(X, i, j, lam):
    return X[i] + lam[:, None] * (X[j] - X[i])


def _same_class_neighbours(Xc: np.ndarray, k: int, cls: int) -> np.ndarray:
    if Xc.shape[0] < 2:
        raise DatasetError(f"class {cls} has a single instance; cannot interpolate")
    return knn_same_set(Xc, min(k, Xc.shape[0] - 1))


def _smote_rows(Xc, ids_c, nn, anchors, rng):
    """Interpolate from each anchor toward a uniformly chosen same-class neighbour."""
    picks = nn[anchors, rng.integers(0, nn.shape[1], anchors.size)]
    lam = rng.random(anchors.size)
    rows = _interpolate(Xc, anchors, picks, lam)
    prov = Provenance(np.ones(anchors.size, bool), ids_c[anchors], ids_c[picks], lam)
    return rows, prov


def smote(data: Dataset, k: int = 5, seed=0) -> AugmentedDataset:
    """SMOTE: x_i + lam * (x_nn - x_i), lam ~ U(0, 1), until classes are balanced."""
    _check_classes(data)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = _rng(seed)
    counts = data.class_counts()
    target = counts.max()
    rows, provs, labels = [], [], []
    for c in range(data.n_classes):
        deficit = target - counts[c]
        if deficit == 0:
            continue
        idx = np.flatnonzero(data.labels == c)
        Xc = data.features[idx]
        nn = _same_class_neighbours(Xc, k, c)
        anchors = rng.integers(0, idx.size, deficit)
        r, p = _smote_rows(Xc, data.instance_ids[idx], nn, anchors, rng)
        rows.append(r)
        provs.append(p)
        labels.append(np.full(deficit, c))
    return _finish(data, rows, provs, labels, "smote", {"k": k})


def _finish(data, rows, provs, labels, method, meta):
    if not rows:
        empty = Provenance(np.zeros(0, bool), np.zeros(0, np.int64), np.zeros(0, np.int64),
                           np.zeros(0))
        return _assemble(data, np.zeros((0, data.feature_count)), [], empty, method,
                         extra_meta=meta)
    return _assemble(data, np.vstack(rows), np.concatenate(labels), Provenance.concat(provs),
                     method, extra_meta=meta)


def apportion(weights, total: int) -> np.ndarray:
    """Split ``total`` into integers proportional to ``weights`` (largest remainder).

    Floors of the exact quotas are topped up one unit at a time in order of
    decreasing fractional part, ties to the lower index, so the result sums
    to ``total`` exactly.
    """
    weights = np.asarray(weights, dtype=np.float64)
    quota = weights / weights.sum() * total
    base = np.floor(quota).astype(np.int64)
    short = int(total - base.sum())
    if short > 0:
        order = np.argsort(-(quota - base), kind="stable")
        base[order[:short]] += 1
    return base


def adasyn_hardness(data: Dataset, cls: int, k: int = 5) -> np.ndarray:
    """Fraction of other-class points among each class-``cls`` row's k nearest neighbours."""
    idx = np.flatnonzero(data.labels == cls)
    nn = _knn(data.features, data.features[idx], min(k, data.n - 1), idx)
    return (data.labels[nn] != cls).mean(axis=1)


def adasyn(data: Dataset, k: int = 5, seed=0) -> AugmentedDataset:
    """ADASYN: SMOTE with per-instance quotas proportional to neighbourhood hardness.

    Hardness uses the k nearest neighbours in the full dataset; quotas are
    apportioned so each class is raised to the majority count exactly. When
    no instance of a class has an other-class neighbour the quota falls back
    to uniform and a warning is logged.
    """
    _check_classes(data)
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = _rng(seed)
    counts = data.class_counts()
    target = counts.max()
    rows, provs, labels = [], [], []
    fallback = []
    for c in range(data.n_classes):
        deficit = target - counts[c]
        if deficit == 0:
            continue
        idx = np.flatnonzero(data.labels == c)
        Xc = data.features[idx]
        nn = _same_class_neighbours(Xc, k, c)
        hardness = adasyn_hardness(data, c, k)
        if hardness.sum() == 0:
            log.warning("ADASYN: class %d has no borderline instances; using uniform allocation", c)
            fallback.append(c)
            hardness = np.ones_like(hardness)
        alloc = apportion(hardness, deficit)
        anchors = np.repeat(np.arange(idx.size), alloc)
        r, p = _smote_rows(Xc, data.instance_ids[idx], nn, anchors, rng)
        rows.append(r)
        provs.append(p)
        labels.append(np.full(deficit, c))
    return _finish(data, rows, provs, labels, "adasyn", {"k": k, "uniform_fallback": fallback})


def remix(data: Dataset, alpha: float = 0.2, seed=0, target: Optional[int] = None
          ) -> AugmentedDataset:
    """Mixup-style balancing with soft labels.

    Every class is first resampled to ``target`` rows (default: geometric
    mean of the class counts): larger classes are under-sampled without
    replacement, smaller ones topped up with duplicates. For each pair of
    classes (a larger, b smaller) the same number of row pairs is drawn and
    each pair emits two mirrored mixes, ``x_a + (1 - lam) * (x_b - x_a)`` with
    soft label ``lam * e_a + (1 - lam) * e_b`` and its twin with ``1 - lam``.
    Mirroring makes the soft-label mass of every class exactly equal. The
    pair count is chosen so the output has about as many rows as the other
    oversamplers produce. Hard labels are the soft-label argmax, ties to the
    smaller class.
    """
    _check_classes(data)
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    rng = _rng(seed)
    counts = data.class_counts()
    N = data.n_classes
    if target is None:
        target = int(round(math.exp(np.log(counts).mean())))
    target = max(int(target), 1)

    # balanced natural pools
    keep, dup_src = [], []
    pools = []
    for c in range(N):
        idx = np.flatnonzero(data.labels == c)
        if idx.size >= target:
            chosen = np.sort(rng.choice(idx, target, replace=False))
            keep.append(chosen)
            pools.append(chosen)
        else:
            extra = idx[rng.integers(0, idx.size, target - idx.size)]
            keep.append(idx)
            dup_src.append(extra)
            pools.append(np.concatenate([idx, extra]))
    keep = np.sort(np.concatenate(keep))
    dup_src = np.concatenate(dup_src) if dup_src else np.empty(0, np.int64)

    # classes ordered largest first so that "a" plays the majority role
    order = sorted(range(N), key=lambda c: (-counts[c], c))
    n_pairs = int(round(max(counts.max() - target, 0) / max(N - 1, 1)))
    xs, soft, hard, pa, pb, lams = [], [], [], [], [], []
    for ai, a in enumerate(order):
        for b in order[ai + 1:]:
            if n_pairs == 0:
                continue
            ia = pools[a][rng.integers(0, target, n_pairs)]
            ib = pools[b][rng.integers(0, target, n_pairs)]
            lam = rng.beta(alpha, alpha, n_pairs)
            lam = np.concatenate([lam, 1.0 - lam])
            ia = np.concatenate([ia, ia])
            ib = np.concatenate([ib, ib])
            xs.append(_remix_rows(data.features[ia], data.features[ib], lam))
            s = np.zeros((lam.size, N))
            s[:, a] = lam
            s[:, b] = 1.0 - lam
            soft.append(s)
            hard.append(np.where(lam > 0.5, a, b))
            pa.append(data.instance_ids[ia])
            pb.append(data.instance_ids[ib])
            lams.append(lam)

    base = data.subset(keep)
    n_dup = dup_src.size
    n_mix = sum(x.shape[0] for x in xs)
    new_X = np.vstack([data.features[dup_src]] + xs) if n_dup + n_mix else np.zeros((0, data.feature_count))
    new_y = np.concatenate([data.labels[dup_src]] + hard) if n_dup + n_mix else np.zeros(0, np.int64)
    prov = Provenance.concat([
        Provenance(np.zeros(n_dup, bool), data.instance_ids[dup_src],
                   np.full(n_dup, -1, np.int64), np.full(n_dup, np.nan)),
        Provenance(np.ones(n_mix, bool),
                   np.concatenate(pa) if pa else np.zeros(0, np.int64),
                   np.concatenate(pb) if pb else np.zeros(0, np.int64),
                   np.concatenate(lams) if lams else np.zeros(0)),
    ])
    onehot = np.eye(N)
    soft_all = np.vstack([onehot[base.labels], onehot[data.labels[dup_src]]] + soft)
    out = Dataset(
        np.vstack([base.features, new_X]),
        np.concatenate([base.labels, new_y]),
        np.concatenate([base.instance_ids, _fresh_ids(data, new_y.size)]),
        N,
        dict(data.metadata),
    )
    meta = {"method": "remix", "alpha": alpha, "undersample_target": target,
            "pairs_per_class_pair": n_pairs}
    return AugmentedDataset(out, Provenance.concat([Provenance.natural(base.instance_ids), prov]),
                            soft_all, meta)


def _remix_rows(xa, xb, lam):
    return xa + (1.0 - lam)[:, None] * (xb - xa)


def replay_synthetic(aug: AugmentedDataset, source: Dataset) -> np.ndarray:
    """Rebuild every synthetic row of ``aug`` from its parents in ``source``."""
    p = aug.provenance
    pos = {int(i): r for r, i in enumerate(source.instance_ids)}
    rows = np.flatnonzero(p.synthetic)
    a = np.array([pos[int(i)] for i in p.parent_a[rows]], dtype=np.int64)
    b = np.array([pos[int(i)] for i in p.parent_b[rows]], dtype=np.int64)
    lam = p.lam[rows]
    X = source.features
    if aug.metadata.get("method") == "remix":
        return _remix_rows(X[a], X[b], lam)
    return _interpolate(X, a, b, lam)


@dataclass(frozen=True)
class ClassWeights:
    weights: tuple

    def per_sample(self, labels) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)[np.asarray(labels)]


def class_weights(data: Dataset) -> ClassWeights:
    """Inverse-frequency weights w_c = n / (N * n_c)."""
    _check_classes(data)
    counts = data.class_counts()
    if counts.min() == 0:
        raise DatasetError("every class needs at least one instance")
    return ClassWeights(tuple(float(data.n / (data.n_classes * c)) for c in counts))


def augment(data: Dataset, method: str, seed=0, k: int = 5, alpha: float = 0.2,
            remix_target: Optional[int] = None) -> AugmentedDataset:
    """Dispatch an input-space method by name (``base`` and ``cs`` return the data unchanged)."""
    if method in ("base", "cs"):
        return AugmentedDataset.from_dataset(data, method)
    if method == "ros":
        return ros(data, seed)
    if method == "smote":
        return smote(data, k, seed)
    if method == "adasyn":
        return adasyn(data, k, seed)
    if method == "remix":
        return remix(data, alpha, seed, remix_target)
    raise ValueError(f"unknown input-space method {method!r}")
