"""LIBSVM ingestion, synthetic separable instances, and separabilization."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .model import ClassificationInstance, SolverConfig, new_instance

logger = logging.getLogger(__name__)

MAX_DRAW_ROUNDS = 200


class LibsvmFormatError(ValueError):
    def __init__(self, msg: str, lineno: Optional[int] = None):
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)
        self.lineno = lineno


class InfeasibleSpec(ValueError):
    """Rejection sampling could not produce enough rows with the requested margin."""


class NoSeparableSubset(ValueError):
    pass


_LABEL_MAPS = (
    ({1.0, -1.0}, {1.0: 1.0, -1.0: -1.0}),
    ({1.0, 0.0}, {1.0: 1.0, 0.0: -1.0}),
    ({1.0, 2.0}, {1.0: 1.0, 2.0: -1.0}),
)


def _map_labels(raw: np.ndarray, linenos: list) -> np.ndarray:
    seen = set(np.unique(raw).tolist())
    for allowed, mapping in _LABEL_MAPS:
        if seen <= allowed:
            return np.array([mapping[v] for v in raw.tolist()])
    bad = sorted(seen - {1.0, -1.0})[0]
    first = linenos[int(np.flatnonzero(raw == bad)[0])]
    raise LibsvmFormatError(f"unsupported label set {sorted(seen)}", first)


def load_libsvm(path, n_features: Optional[int] = None) -> ClassificationInstance:
    """Parse ``<label> <idx>:<val> ...`` lines into a folded CSR instance.

    Indices are 1-based in the file. Labels may be {+1,-1}, {1,0} or {1,2};
    0 and 2 become -1. Blank lines and ``#`` comments are ignored.
    """
    labels, linenos = [], []
    indptr, indices, values = [0], [], []
    max_index = 0
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise LibsvmFormatError(f"bad label {tokens[0]!r}", lineno) from None
            linenos.append(lineno)
            prev = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise LibsvmFormatError(f"expected <index>:<value>, got {tok!r}", lineno)
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise LibsvmFormatError(f"bad feature {tok!r}", lineno) from None
                if idx < 1:
                    raise LibsvmFormatError(f"feature index {idx} must be >= 1", lineno)
                if idx <= prev:
                    raise LibsvmFormatError("feature indices must be strictly increasing", lineno)
                if not np.isfinite(val):
                    raise LibsvmFormatError(f"non-finite value {tok!r}", lineno)
                prev = idx
                indices.append(idx - 1)
                values.append(val)
            max_index = max(max_index, prev)
            indptr.append(len(indices))
    if not labels:
        raise LibsvmFormatError(f"{path}: no data lines")
    n = max_index if n_features is None else n_features
    if n < max_index:
        raise LibsvmFormatError(f"feature index {max_index} exceeds n_features={n}")
    y = _map_labels(np.array(labels), linenos)
    X = sp.csr_matrix((np.array(values, dtype=np.float64), np.array(indices, dtype=np.int64),
                       np.array(indptr, dtype=np.int64)), shape=(len(labels), max(n, 1)))
    return new_instance(X, y)


def write_libsvm(instance: ClassificationInstance, path) -> None:
    """Write the folded rows with label +1 each, values at 17 significant digits."""
    rows = sp.csr_matrix(instance.rows)
    with open(path, "w") as fh:
        for i in range(instance.m):
            lo, hi = rows.indptr[i], rows.indptr[i + 1]
            feats = " ".join(f"{j + 1}:{v:.17g}" for j, v in zip(rows.indices[lo:hi], rows.data[lo:hi])
                             if v != 0)
            fh.write(f"+1 {feats}\n" if feats else "+1\n")


def scale_features(instance: ClassificationInstance) -> ClassificationInstance:
    """Divide every column by its largest magnitude so entries lie in [-1, 1]."""
    scale = np.asarray(abs(instance.rows).max(axis=0).todense()).ravel() if instance.is_sparse \
        else np.max(np.abs(instance.rows), axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    if instance.is_sparse:
        rows = sp.csr_matrix(instance.rows @ sp.diags(1.0 / scale))
    else:
        rows = instance.rows / scale
    return new_instance(rows, np.ones(instance.m))


@dataclass(frozen=True)
class SyntheticSpec:
    m: int
    n: int
    margin: float
    seed: int = 0
    planted_sparsity: Optional[int] = None
    box: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if not self.margin > 0 or not self.box > 0:
            raise ValueError("margin and box must be positive")
        if self.planted_sparsity is not None and not 1 <= self.planted_sparsity <= self.n:
            raise ValueError("planted_sparsity must lie in [1, n]")


def generate_separable(spec: SyntheticSpec) -> Tuple[ClassificationInstance, np.ndarray]:
    """Rows uniform in [-box, box]^n labelled by a random unit direction.

    Rows closer than ``margin`` to the separating hyperplane are redrawn, so
    every folded margin along the returned direction is at least ``margin``.
    """
    rng = np.random.default_rng(spec.seed)
    planted = np.zeros(spec.n)
    k = spec.n if spec.planted_sparsity is None else spec.planted_sparsity
    coords = np.sort(rng.choice(spec.n, size=k, replace=False))
    direction = rng.standard_normal(k)
    while not np.all(direction != 0):
        direction = rng.standard_normal(k)
    planted[coords] = direction / np.linalg.norm(direction)

    rows, labels = [], []
    have = 0
    for _ in range(MAX_DRAW_ROUNDS):
        batch = rng.uniform(-spec.box, spec.box, size=(2 * spec.m, spec.n))
        scores = batch @ planted
        ok = np.abs(scores) >= spec.margin
        rows.append(batch[ok])
        labels.append(np.sign(scores[ok]))
        have += int(ok.sum())
        if have >= spec.m:
            break
    else:
        raise InfeasibleSpec(
            f"only {have} of {spec.m} rows reached margin {spec.margin} with box {spec.box}")
    rows = np.concatenate(rows)[: spec.m]
    labels = np.concatenate(labels)[: spec.m]
    return new_instance(rows, labels), planted


def separabilize(instance: ClassificationInstance, warmup_iters: int, policy=None):
    """Run gradient descent from zero, then drop every row it misclassifies
    (margin <= 0). Returns the filtered instance and the warm-up iterate."""
    from .dense_gd import solve_gd, variable_policy

    if warmup_iters < 1:
        raise ValueError("warmup_iters must be >= 1")
    if policy is None:
        policy = variable_policy(instance)
    result = solve_gd(instance, np.zeros(instance.n), policy, SolverConfig(max_iters=warmup_iters))
    keep = instance.matvec(result.solution) > 0
    if not keep.any():
        raise NoSeparableSubset("no separable subset found: every row is misclassified")
    dropped = instance.m - int(keep.sum())
    logger.info("separabilize: dropped %d of %d rows", dropped, instance.m)
    if dropped == 0:
        return instance, result.solution
    return instance.subset_rows(keep), result.solution


def make_separable(instance: ClassificationInstance, warmup_iters: int, policy=None) -> ClassificationInstance:
    return separabilize(instance, warmup_iters, policy)[0]


def dataset_name(path) -> str:
    return os.path.basename(str(path))
