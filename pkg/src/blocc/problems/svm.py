"""Soft-margin SVM hyperparameter tuning as a bilevel problem.

Upper level chooses per-sample slack caps c (one per training point) to
minimize validation loss; lower level fits the SVM on the training split:

    min_{w,b,xi}  |w|^2/2 + ridge*(b^2 + |xi|^2)
    s.t.          1 - xi_i - l_i (z_i^T w + b) <= 0     (margin rows)
                  xi_i - c_i <= 0                       (cap rows)

All constraints are affine in y = (w, b, xi) and Y = R^{d_y}, so the inner
solver may run in single-loop mode.  The ridge term restores strong convexity
in (b, xi), which |w|^2/2 alone does not provide.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ConfigError, ParseError
from ..problem import BilevelOracle, LipschitzBounds


@dataclass
class SvmDataset:
    """Dense feature matrix with +-1 labels and a deterministic 60/20/20
    train/validation/test split drawn from ``seed``."""

    features: np.ndarray
    labels: np.ndarray
    n_train: int
    n_val: int
    n_test: int
    seed: int

    def __post_init__(self) -> None:
        n = self.features.shape[0]
        if self.labels.shape != (n,):
            raise ConfigError(
                f"labels length {self.labels.shape} != sample count {n}")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ConfigError("labels must be in {-1, +1}")
        if self.n_train + self.n_val + self.n_test != n:
            raise ConfigError(
                f"split sizes {self.n_train}+{self.n_val}+{self.n_test} "
                f"do not sum to sample count {n}")

    @property
    def _perm(self) -> np.ndarray:
        return np.random.default_rng(self.seed).permutation(
            self.features.shape[0])

    @property
    def train_idx(self) -> np.ndarray:
        return self._perm[:self.n_train]

    @property
    def val_idx(self) -> np.ndarray:
        return self._perm[self.n_train:self.n_train + self.n_val]

    @property
    def test_idx(self) -> np.ndarray:
        return self._perm[self.n_train + self.n_val:]


def default_split_sizes(n: int) -> Tuple[int, int, int]:
    """60/20/20 split; rounding residue goes to the training split."""
    n_val = n // 5
    n_test = n // 5
    return n - n_val - n_test, n_val, n_test


def parse_libsvm(text: str, seed: int = 0,
                 label_map: Optional[Dict[float, float]] = None) -> SvmDataset:
    """Parse LIBSVM sparse text ("label idx:val ...", 1-based indices).

    Indices must be strictly increasing within a line; absent features are
    zero.  Labels must already be +-1 unless ``label_map`` remaps them.
    """
    labels = []
    rows = []
    max_idx = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad label {tokens[0]!r}")
        if label_map is not None:
            if label not in label_map:
                raise ParseError(
                    f"line {lineno}: label {label} missing from label_map")
            label = label_map[label]
        if label not in (-1.0, 1.0):
            raise ParseError(
                f"line {lineno}: label {label} is not +-1 "
                "(pass label_map to remap)")
        row = {}
        prev = 0
        for tok in tokens[1:]:
            try:
                idx_s, val_s = tok.split(':', 1)
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise ParseError(f"line {lineno}: malformed token {tok!r}")
            if idx <= prev:
                raise ParseError(
                    f"line {lineno}: indices not strictly increasing "
                    f"({idx} after {prev})")
            prev = idx
            row[idx] = val
        max_idx = max(max_idx, prev)
        labels.append(label)
        rows.append(row)
    if not rows:
        raise ParseError("no samples in input")
    X = np.zeros((len(rows), max_idx))
    for i, row in enumerate(rows):
        for idx, val in row.items():
            X[i, idx - 1] = val
    n_tr, n_val, n_te = default_split_sizes(len(rows))
    return SvmDataset(features=X, labels=np.asarray(labels),
                      n_train=n_tr, n_val=n_val, n_test=n_te, seed=seed)


def build_svm(dataset: SvmDataset, ridge: float = 1e-3,
              nonneg_c: bool = False) -> BilevelOracle:
    """Build the bilevel oracle for one train/val split of ``dataset``.

    x = c in R^{n_train}; y = (w, b, xi) of length d + 1 + n_train.
    Constraint order: n_train margin rows, then n_train cap rows.
    """
    if ridge < 0:
        raise ConfigError("ridge must be nonnegative")
    if ridge == 0:
        warnings.warn("ridge=0: lower objective is not strongly convex "
                      "in (b, xi)")
    tr, va = dataset.train_idx, dataset.val_idx
    if len(tr) == 0 or len(va) == 0:
        raise ConfigError("empty train or validation split")
    Z = dataset.features[tr]
    l = dataset.labels[tr]
    Zv = dataset.features[va]
    lv = dataset.labels[va]
    n, d = Z.shape
    dim_y = d + 1 + n

    def split_y(y):
        return y[:d], y[d], y[d + 1:]

    def eval_f(x, y):
        w, b, _ = split_y(y)
        return float(np.sum(np.exp(1.0 - lv * (Zv @ w + b)))
                     + 0.5 * np.dot(x, x))

    def grad_f_x(x, y):
        return x.astype(float).copy()

    def grad_f_y(x, y):
        w, b, _ = split_y(y)
        e = np.exp(1.0 - lv * (Zv @ w + b))
        g = np.zeros(dim_y)
        g[:d] = -Zv.T @ (e * lv)
        g[d] = -np.dot(e, lv)
        return g

    def eval_g(x, y):
        w, b, xi = split_y(y)
        return float(0.5 * np.dot(w, w)
                     + ridge * (b * b + np.dot(xi, xi)))

    def grad_g_x(x, y):
        return np.zeros(n)

    def grad_g_y(x, y):
        w, b, xi = split_y(y)
        g = np.empty(dim_y)
        g[:d] = w
        g[d] = 2.0 * ridge * b
        g[d + 1:] = 2.0 * ridge * xi
        return g

    def eval_gc(x, y):
        w, b, xi = split_y(y)
        margin = 1.0 - xi - l * (Z @ w + b)
        cap = xi - x
        return np.concatenate([margin, cap])

    def vjp_gc_x(x, y, mu):
        return -mu[n:].astype(float)

    def vjp_gc_y(x, y, mu):
        mu_m, mu_c = mu[:n], mu[n:]
        g = np.empty(dim_y)
        g[:d] = -Z.T @ (mu_m * l)
        g[d] = -np.dot(mu_m, l)
        g[d + 1:] = -mu_m + mu_c
        return g

    if nonneg_c:
        project_X = lambda v: np.maximum(v, 0.0)
    else:
        project_X = lambda v: np.asarray(v, dtype=float)

    # Constraint Jacobian wrt y is constant; its spectral norm bounds the
    # constraint Lipschitz constant used in dual stepsize rules.
    jac = np.zeros((2 * n, dim_y))
    jac[:n, :d] = -(l[:, None] * Z)
    jac[:n, d] = -l
    jac[:n, d + 1:] = -np.eye(n)
    jac[n:, d + 1:] = np.eye(n)
    l_gc0 = float(np.linalg.norm(jac, 2))

    return BilevelOracle(
        dim_x=n, dim_y=dim_y, num_ineq=2 * n, num_eq=0,
        alpha_g=min(1.0, 2.0 * ridge) if ridge > 0 else 0.0,
        eval_f=eval_f, grad_f_x=grad_f_x, grad_f_y=grad_f_y,
        eval_g=eval_g, grad_g_x=grad_g_x, grad_g_y=grad_g_y,
        eval_gc=eval_gc, vjp_gc_x=vjp_gc_x, vjp_gc_y=vjp_gc_y,
        project_X=project_X,
        project_Y=lambda v: np.asarray(v, dtype=float),
        lipschitz=LipschitzBounds(l_f1=None, l_g1=max(1.0, 2.0 * ridge),
                                  l_gc0=l_gc0, l_gc1=0.0),
        default_steps_g=(0.1, 0.002),
        default_steps_F=(5e-4, 0.12),
    )
