# problem.py

import hashlib
import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import HogwildError
from .states import ObjectiveKind, RegularizationMode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SparseVector:
    """Index/value pairs over a parameter space of fixed dimension"""
    indices: np.ndarray
    values: np.ndarray
    dimension: int

    def __post_init__(self):
        if len(self.indices) != len(self.values):
            raise HogwildError(
                "DIMENSION_MISMATCH",
                f"{len(self.indices)} indices but {len(self.values)} values"
            )

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension)
        dense[self.indices] = self.values
        return dense

    def restrict(self, block: np.ndarray) -> "SparseVector":
        """Entries at the coordinates of `block`, which must be a sorted subset of the support"""
        positions = np.searchsorted(self.indices, block)
        return SparseVector(block, self.values[positions], self.dimension)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.values).all())


@dataclass(frozen=True)
class Dataset:
    """Training set {(x_i, y_i)} stored as a CSR matrix with one row per sample"""
    features: sparse.csr_matrix
    labels: np.ndarray
    label_rule: str = "identity"

    def __post_init__(self):
        if self.features.shape[0] < 1:
            raise HogwildError("INVALID_CONFIG", "Dataset must contain at least one sample")
        if self.features.shape[0] != len(self.labels):
            raise HogwildError(
                "DIMENSION_MISMATCH",
                f"{self.features.shape[0]} feature rows but {len(self.labels)} labels"
            )
        if not np.isfinite(self.features.data).all() or not np.isfinite(self.labels).all():
            raise HogwildError("INVALID_CONFIG", "Dataset contains non-finite values")
        self.features.sort_indices()

    @classmethod
    def from_rows(cls, rows, labels, dimension: int, label_rule: str = "identity") -> "Dataset":
        """Build from a sequence of (indices, values) pairs with 0-based indices"""
        indptr = [0]
        indices, values = [], []
        for row_indices, row_values in rows:
            indices.extend(int(j) for j in row_indices)
            values.extend(float(v) for v in row_values)
            indptr.append(len(indices))
        if indices and max(indices) >= dimension:
            raise HogwildError(
                "DIMENSION_MISMATCH",
                f"Feature index {max(indices)} outside dimension {dimension}"
            )
        features = sparse.csr_matrix(
            (np.asarray(values, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(indptr) - 1, dimension)
        )
        return cls(features, np.asarray(labels, dtype=float), label_rule)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    @cached_property
    def coordinate_counts(self) -> np.ndarray:
        """n_j: number of samples whose feature support contains coordinate j"""
        return np.bincount(self.features.indices, minlength=self.dimension).astype(np.int64)

    @cached_property
    def row_sizes(self) -> np.ndarray:
        return np.diff(self.features.indptr)

    def row(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        start, end = self.features.indptr[i], self.features.indptr[i + 1]
        return self.features.indices[start:end], self.features.data[start:end]

    def fingerprint(self) -> str:
        """SHA256 over the canonical CSR arrays and labels"""
        sha256_hash = hashlib.sha256()
        sha256_hash.update(np.asarray(self.features.shape, dtype=np.int64).tobytes())
        sha256_hash.update(self.features.indptr.astype(np.int64).tobytes())
        sha256_hash.update(self.features.indices.astype(np.int64).tobytes())
        sha256_hash.update(self.features.data.astype(np.float64).tobytes())
        sha256_hash.update(self.labels.astype(np.float64).tobytes())
        return sha256_hash.hexdigest()

    def with_dimension(self, dimension: int) -> "Dataset":
        """Widen the parameter space, e.g. to match a companion test split"""
        if dimension < self.dimension:
            raise HogwildError(
                "INVALID_CONFIG",
                f"Cannot shrink dimension from {self.dimension} to {dimension}"
            )
        features = sparse.csr_matrix(
            (self.features.data, self.features.indices, self.features.indptr),
            shape=(self.n, dimension)
        )
        return replace(self, features=features)

    def subsample(self, rows: int, seed: int) -> "Dataset":
        """Uniform subsample without replacement, original row order preserved"""
        if rows >= self.n:
            return self
        chosen = np.sort(np.random.default_rng(seed).choice(self.n, size=rows, replace=False))
        return replace(self, features=self.features[chosen], labels=self.labels[chosen])

    def normalized_l2(self) -> "Dataset":
        """Scale every sample to unit Euclidean norm (empty rows untouched)"""
        norms = np.sqrt(np.asarray(self.features.multiply(self.features).sum(axis=1)).ravel())
        norms[norms == 0] = 1.0
        features = sparse.csr_matrix(sparse.diags(1.0 / norms) @ self.features)
        return replace(self, features=features)


class Objective:
    """Finite-sum objective F(w) = (1/n) sum_i f_i(w) with sparse per-sample gradients"""

    def __init__(self, kind: ObjectiveKind, dataset: Optional[Dataset] = None, lam: float = 0.0,
                 regularization_mode: RegularizationMode = RegularizationMode.SUPPORT_WEIGHTED):
        if lam < 0:
            raise HogwildError("INVALID_CONFIG", f"lambda must be >= 0, got {lam}")
        if kind != ObjectiveKind.TOY_QUADRATIC and dataset is None:
            raise HogwildError("INVALID_CONFIG", f"{kind.value} requires a dataset")
        self.kind = kind
        self.dataset = dataset
        self.lam = float(lam)
        self.regularization_mode = regularization_mode

        if kind == ObjectiveKind.TOY_QUADRATIC:
            self._reg_weight = np.zeros(1)
        else:
            counts = dataset.coordinate_counts
            # lambda * n / n_j on covered coordinates, nothing where n_j = 0
            self._reg_weight = np.zeros(dataset.dimension)
            covered = counts > 0
            self._reg_weight[covered] = self.lam * dataset.n / counts[covered]
            self._covered = covered

    @classmethod
    def toy_quadratic(cls) -> "Objective":
        """f_1(w) = w^2/2 and f_2(w) = w on the real line"""
        return cls(ObjectiveKind.TOY_QUADRATIC)

    @classmethod
    def logistic(cls, dataset: Dataset, lam: float,
                 regularization_mode: RegularizationMode = RegularizationMode.SUPPORT_WEIGHTED) -> "Objective":
        return cls(ObjectiveKind.LOGISTIC_L2, dataset, lam, regularization_mode)

    @classmethod
    def least_squares(cls, dataset: Dataset, lam: float,
                      regularization_mode: RegularizationMode = RegularizationMode.SUPPORT_WEIGHTED) -> "Objective":
        return cls(ObjectiveKind.LEAST_SQUARES_L2, dataset, lam, regularization_mode)

    @property
    def n(self) -> int:
        return 2 if self.kind == ObjectiveKind.TOY_QUADRATIC else self.dataset.n

    @property
    def dimension(self) -> int:
        return 1 if self.kind == ObjectiveKind.TOY_QUADRATIC else self.dataset.dimension

    @property
    def is_dense(self) -> bool:
        return self.regularization_mode == RegularizationMode.DENSE

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "lambda": self.lam,
            "regularization_mode": self.regularization_mode.value,
            "n": self.n,
            "d": self.dimension,
        }

    # -- validation helpers

    def _check_w(self, w: np.ndarray) -> None:
        if w.shape != (self.dimension,):
            raise HogwildError(
                "DIMENSION_MISMATCH",
                f"Expected a vector of length {self.dimension}, got shape {w.shape}"
            )

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise HogwildError(
                "INDEX_OUT_OF_RANGE",
                f"Sample index {i} outside [0, {self.n})"
            )

    # -- per-sample loss pieces

    def _loss_coefficients(self, margins: np.ndarray, labels: np.ndarray) -> np.ndarray:
        """Derivative of the per-sample loss with respect to the margin <x_i, w>"""
        if self.kind == ObjectiveKind.LOGISTIC_L2:
            return -labels * expit(-labels * margins)
        return 2.0 * (margins - labels)

    def _loss_values(self, margins: np.ndarray, labels: np.ndarray) -> np.ndarray:
        if self.kind == ObjectiveKind.LOGISTIC_L2:
            return np.logaddexp(0.0, -labels * margins)
        return (margins - labels) ** 2

    @cached_property
    def support_counts(self) -> np.ndarray:
        """Per coordinate, the number of samples whose support D_xi contains it"""
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return np.array([2], dtype=np.int64)
        if self.is_dense:
            return np.full(self.dimension, self.n, dtype=np.int64)
        return self.dataset.coordinate_counts

    @cached_property
    def support_sizes(self) -> np.ndarray:
        """|D_xi| for every sample"""
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return np.array([1, 1], dtype=np.int64)
        if self.is_dense:
            return np.full(self.n, self.dimension, dtype=np.int64)
        return self.dataset.row_sizes.astype(np.int64)

    def sample_support(self, i: int) -> np.ndarray:
        """The fixed set D_xi of coordinates where grad f_i can be nonzero"""
        self._check_index(i)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return np.array([0], dtype=np.int64)
        if self.is_dense:
            return np.arange(self.dimension, dtype=np.int64)
        return self.dataset.row(i)[0].astype(np.int64)

    def regularizer_value(self, w: np.ndarray, i: int) -> float:
        """Per-sample regularizer; its average over i equals (lambda/2)||w||^2 on covered coordinates"""
        self._check_w(w)
        self._check_index(i)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return 0.0
        if self.is_dense:
            return 0.5 * self.lam * float(w @ w)
        idx = self.dataset.row(i)[0]
        return 0.5 * float(self._reg_weight[idx] @ (w[idx] ** 2))

    def sample_value(self, w: np.ndarray, i: int) -> float:
        self._check_w(w)
        self._check_index(i)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return 0.5 * float(w[0]) ** 2 if i == 0 else float(w[0])
        idx, x = self.dataset.row(i)
        margin = np.array([x @ w[idx]])
        label = self.dataset.labels[i:i + 1]
        return float(self._loss_values(margin, label)[0]) + self.regularizer_value(w, i)

    def stochastic_gradient(self, w: np.ndarray, i: int) -> SparseVector:
        """grad f_i(w) as a sparse vector supported on sample_support(i)"""
        self._check_w(w)
        self._check_index(i)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            value = w[0] if i == 0 else 1.0
            return SparseVector(np.array([0], dtype=np.int64), np.array([value], dtype=float), 1)

        idx, x = self.dataset.row(i)
        label = self.dataset.labels[i]
        coef = self._loss_coefficients(np.array([x @ w[idx]]), np.array([label]))[0]
        if self.is_dense:
            values = self.lam * w
            values[idx] += coef * x
            return SparseVector(np.arange(self.dimension, dtype=np.int64), values, self.dimension)
        values = coef * x + self._reg_weight[idx] * w[idx]
        return SparseVector(idx.astype(np.int64), values, self.dimension)

    def full_objective(self, w: np.ndarray) -> float:
        """F(w) = (1/n) sum_i f_i(w)"""
        self._check_w(w)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return 0.5 * (0.5 * float(w[0]) ** 2 + float(w[0]))
        margins = self.dataset.features @ w
        loss = float(np.mean(self._loss_values(margins, self.dataset.labels)))
        if self.is_dense:
            return loss + 0.5 * self.lam * float(w @ w)
        wc = w[self._covered]
        return loss + 0.5 * self.lam * float(wc @ wc)

    def full_gradient(self, w: np.ndarray) -> np.ndarray:
        """grad F(w), the exact average of the per-sample gradients"""
        self._check_w(w)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return np.array([0.5 * (w[0] + 1.0)])
        features = self.dataset.features
        coef = self._loss_coefficients(features @ w, self.dataset.labels)
        gradient = (features.T @ coef) / self.n
        if self.is_dense:
            return gradient + self.lam * w
        return gradient + self.lam * np.where(self._covered, w, 0.0)

    def gradient_matrix(self, w: np.ndarray) -> sparse.csr_matrix:
        """All per-sample gradients stacked as rows (n x d)"""
        self._check_w(w)
        if self.kind == ObjectiveKind.TOY_QUADRATIC:
            return sparse.csr_matrix(np.array([[w[0]], [1.0]]))
        features = self.dataset.features
        coef = self._loss_coefficients(features @ w, self.dataset.labels)
        if self.is_dense:
            dense = np.asarray(features.multiply(coef[:, None]).todense()) + self.lam * w[None, :]
            return sparse.csr_matrix(dense)
        rows = np.repeat(np.arange(self.n), np.diff(features.indptr))
        data = coef[rows] * features.data + self._reg_weight[features.indices] * w[features.indices]
        return sparse.csr_matrix((data, features.indices, features.indptr), shape=features.shape)

    def gradient_second_moment(self, w: np.ndarray) -> float:
        """E||grad f(w; xi)||^2 as an exact finite-sum average"""
        grads = self.gradient_matrix(w)
        return float(grads.multiply(grads).sum()) / self.n


@dataclass(frozen=True)
class ProblemConstants:
    L: float
    mu: float
    kappa: float
    N: float
    w_star: np.ndarray
    F_star: float
    convex_realizations: bool = True
    reference_tol: float = 0.0

    def as_dict(self) -> dict:
        return {
            "L": self.L,
            "mu": self.mu,
            "kappa": self.kappa,
            "N": self.N,
            "F_star": self.F_star,
            "w_star_norm": float(np.linalg.norm(self.w_star)),
            "convex_realizations": self.convex_realizations,
            "reference_tol": self.reference_tol,
        }


def estimate_constants(obj: Objective) -> Tuple[float, float]:
    """Conservative smoothness L over all realizations and strong convexity mu of F"""
    if obj.kind == ObjectiveKind.TOY_QUADRATIC:
        return 1.0, 0.5

    features = obj.dataset.features
    row_sq_norms = np.asarray(features.multiply(features).sum(axis=1)).ravel()
    curvature = 0.25 if obj.kind == ObjectiveKind.LOGISTIC_L2 else 2.0

    if obj.is_dense:
        L = float(np.max(curvature * row_sq_norms)) + obj.lam
    else:
        weights = sparse.csr_matrix(
            (obj._reg_weight[features.indices], features.indices, features.indptr),
            shape=features.shape
        )
        max_weight = weights.max(axis=1).toarray().ravel()
        L = float(np.max(curvature * row_sq_norms + max_weight))

    mu = obj.lam
    if mu <= 0:
        raise HogwildError(
            "NOT_STRONGLY_CONVEX",
            f"{obj.kind.value} with lambda = {obj.lam} is not strongly convex (mu = 0)"
        )
    if L <= 0:
        # every sample is empty; only the regularizer curves F
        L = mu
    return L, mu


def solve_reference(obj: Objective, tol: float, max_iter: int = 1_000_000,
                    L: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """Deterministic full-batch gradient descent with step 1/L from w = 0"""
    if tol <= 0:
        raise HogwildError("INVALID_CONFIG", f"Reference tolerance must be > 0, got {tol}")
    if L is None:
        L, _ = estimate_constants(obj)

    w = np.zeros(obj.dimension)
    for iteration in range(max_iter + 1):
        gradient = obj.full_gradient(w)
        grad_norm = float(np.linalg.norm(gradient))
        if grad_norm <= tol:
            F_star = obj.full_objective(w)
            logger.info(f"Reference solve converged after {iteration} iterations: "
                        f"F* = {F_star:.12g}, ||grad F|| = {grad_norm:.3e}")
            return w, F_star
        w = w - gradient / L

    raise HogwildError(
        "REFERENCE_NOT_CONVERGED",
        f"Gradient descent did not reach ||grad F|| <= {tol} within {max_iter} iterations",
        {"grad_norm": grad_norm, "max_iter": max_iter}
    )


def compute_variance_constant(obj: Objective, w_star: np.ndarray) -> float:
    """N = 2 E||grad f(w*; xi)||^2"""
    return 2.0 * obj.gradient_second_moment(w_star)


def compute_constants(obj: Objective, tol: float, max_iter: int = 1_000_000,
                      l_scale: float = 1.0) -> ProblemConstants:
    """L, mu, kappa, N and the reference solution in one pass

    `l_scale` multiplies the estimated L; values below 1 produce an invalid
    constant on purpose, for falsification runs of the verifier.
    """
    L, mu = estimate_constants(obj)
    w_star, F_star = solve_reference(obj, tol, max_iter, L)
    L = L * l_scale
    N = compute_variance_constant(obj, w_star)
    constants = ProblemConstants(
        L=L, mu=mu, kappa=L / mu, N=N, w_star=w_star, F_star=F_star,
        convex_realizations=True, reference_tol=tol
    )
    logger.debug(f"Problem constants: {constants.as_dict()}")
    return constants
