"""Soft-margin linear SVM trained by sequential minimal optimization.

The binary solver maximizes the usual dual

    D(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t.  0 <= a_i <= C,  sum a_i y_i = 0

by repeatedly optimizing the maximal-violating pair: with
F_i = f(x_i) - b - y_i, the pair (argmax F over I_low, argmin F over
I_up) most violates the KKT conditions, and training stops once the gap
b_low - b_up falls within tolerance. Pair selection breaks ties by index
so retraining is reproducible without seeds. The dual objective is
non-decreasing across iterations by construction of the analytic
two-variable update.

Multi-class problems compose one binary machine per unordered class
pair, predicting by majority vote with ties broken by summed signed
margins and then by class order. Features are standardized (z-scores
with a variance floor) by a Standardizer fitted on training data only.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
MAX_ITER = 100_000
SIGMA_FLOOR = 1e-12
_ALPHA_SNAP = 1e-12


class ConvergenceError(RuntimeError):
    """SMO hit the iteration cap; carries the residual KKT violation."""

    def __init__(self, residual: float, n_iter: int):
        self.residual = residual
        self.n_iter = n_iter
        super().__init__(
            f"SMO did not converge within {n_iter} iterations "
            f"(residual KKT violation {residual:.3e})"
        )


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        std = X.std(axis=0)
        return cls(mean=X.mean(axis=0), std=np.maximum(std, SIGMA_FLOOR))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


@dataclass(frozen=True)
class BinarySvm:
    """Trained binary machine with the linear kernel collapsed to weights."""

    weights: np.ndarray
    bias: float
    support_indices: np.ndarray
    support_coef: np.ndarray  # alpha_i * y_i for the support vectors
    support_vectors: np.ndarray
    C: float
    n_iter: int
    residual: float
    objective_history: tuple[float, ...] = field(default=(), repr=False)

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias


def _dual_objective(alpha: np.ndarray, y: np.ndarray, G: np.ndarray) -> float:
    # G_i = sum_j alpha_j y_j K_ij, so D = sum(alpha) - 1/2 sum alpha_i y_i G_i
    return float(alpha.sum() - 0.5 * np.dot(alpha * y, G))


def train_binary_smo(
    X,
    y,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    track_objective: bool = False,
) -> BinarySvm:
    """Train a linear soft-margin SVM on +/-1 labels via SMO.

    Raises ConvergenceError with the residual violation if the maximal
    KKT violation has not fallen within tolerance after max_iter
    two-variable updates.
    """
    X = np.asarray(X, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != ya.size:
        raise ValueError("X must be (n, d) with one label per row")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(ya)):
        raise ValueError("non-finite values in training data")
    if set(np.unique(ya)) != {-1.0, 1.0}:
        raise ValueError("labels must contain both +1 and -1")
    n = X.shape[0]

    K = X @ X.T
    alpha = np.zeros(n)
    G = np.zeros(n)  # sum_j alpha_j y_j K_ij
    history: list[float] = []
    if track_objective:
        history.append(_dual_objective(alpha, ya, G))

    pos = ya > 0
    idx = np.arange(n)

    def gap_and_pair():
        F = G - ya
        up_mask = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low_mask = (pos & (alpha > 0)) | (~pos & (alpha < C))
        f_up = np.where(up_mask, F, np.inf)
        f_low = np.where(low_mask, F, -np.inf)
        j = int(np.argmin(f_up))
        i = int(np.argmax(f_low))
        return float(f_low[i] - f_up[j]), i, j, F

    n_iter = 0
    gap, i, j, F = gap_and_pair()
    while gap > tol:
        if n_iter >= max_iter:
            raise ConvergenceError(residual=gap, n_iter=n_iter)

        # analytic two-variable update on the maximal-violating pair (i, j)
        yi, yj = ya[i], ya[j]
        s = yi * yj
        if s < 0:
            L = max(0.0, alpha[j] - alpha[i])
            H = min(C, C + alpha[j] - alpha[i])
        else:
            L = max(0.0, alpha[i] + alpha[j] - C)
            H = min(C, alpha[i] + alpha[j])
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        aj_old = alpha[j]
        ai_old = alpha[i]
        if eta > 1e-12:
            aj = aj_old + yj * (F[i] - F[j]) / eta
            aj = min(max(aj, L), H)
        else:
            # degenerate curvature: the objective is linear in the step,
            # move to whichever box end scores better
            slope = yj * (F[i] - F[j])
            aj = H if slope > 0 else L
        if abs(aj - aj_old) < 1e-14:
            # no progress possible on this pair within the box
            break
        ai = ai_old + s * (aj_old - aj)
        if ai < _ALPHA_SNAP:
            ai = 0.0
        elif ai > C - _ALPHA_SNAP:
            ai = C
        if aj < _ALPHA_SNAP:
            aj = 0.0
        elif aj > C - _ALPHA_SNAP:
            aj = C
        d_i = (ai - ai_old) * yi
        d_j = (aj - aj_old) * yj
        alpha[i] = ai
        alpha[j] = aj
        G += d_i * K[i] + d_j * K[j]
        n_iter += 1
        if track_objective:
            history.append(_dual_objective(alpha, ya, G))
        gap, i, j, F = gap_and_pair()

    # bias from the midpoint of the feasible interval
    F = G - ya
    up_mask = (pos & (alpha < C)) | (~pos & (alpha > 0))
    low_mask = (pos & (alpha > 0)) | (~pos & (alpha < C))
    b_up = float(np.min(np.where(up_mask, F, np.inf)))
    b_low = float(np.max(np.where(low_mask, F, -np.inf)))
    if not np.isfinite(b_up):
        b_up = b_low
    if not np.isfinite(b_low):
        b_low = b_up
    bias = -(b_up + b_low) / 2.0

    sv = idx[alpha > 0]
    coef = alpha[sv] * ya[sv]
    weights = X[sv].T @ coef if sv.size else np.zeros(X.shape[1])
    return BinarySvm(
        weights=weights,
        bias=bias,
        support_indices=sv,
        support_coef=coef,
        support_vectors=X[sv],
        C=C,
        n_iter=n_iter,
        residual=max(gap, 0.0),
        objective_history=tuple(history),
    )


@dataclass(frozen=True)
class OneVsOneEnsemble:
    classes: tuple[str, ...]
    machines: dict[tuple[int, int], BinarySvm]

    def __post_init__(self):
        n = len(self.classes)
        if len(self.machines) != n * (n - 1) // 2:
            raise ValueError("one machine per unordered class pair required")


def train_one_vs_one(
    X,
    y,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    class_order: tuple[str, ...] | None = None,
) -> OneVsOneEnsemble:
    """Train one binary machine per class pair on (already standardized) X.

    Within a pair (a, b), a maps to +1 and b to -1. class_order fixes the
    class list (and tie-breaking order); it defaults to sorted labels.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(y)
    present = set(str(v) for v in np.unique(labels))
    if class_order is None:
        classes = tuple(sorted(present))
    else:
        classes = tuple(class_order)
        missing = present - set(classes)
        if missing:
            raise ValueError(f"labels {sorted(missing)} missing from class_order")
        classes = tuple(c for c in classes if c in present)
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")

    machines: dict[tuple[int, int], BinarySvm] = {}
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            mask = (labels == classes[a]) | (labels == classes[b])
            pair_y = np.where(labels[mask] == classes[a], 1.0, -1.0)
            machines[(a, b)] = train_binary_smo(X[mask], pair_y, C=C, tol=tol)
    return OneVsOneEnsemble(classes=classes, machines=machines)


def predict(model: OneVsOneEnsemble, standardizer: Standardizer | None, X) -> list[str]:
    """Predict class labels; standardization is applied internally."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    expected = model.machines[next(iter(model.machines))].weights.size
    if X.shape[1] != expected:
        raise ValueError(f"feature dimension {X.shape[1]} does not match model ({expected})")
    Z = standardizer.transform(X) if standardizer is not None else X

    n = X.shape[0]
    k = len(model.classes)
    votes = np.zeros((n, k), dtype=np.int64)
    margins = np.zeros((n, k))
    for (a, b), machine in model.machines.items():
        f = machine.decision(Z)
        wins_a = f > 0
        votes[:, a] += wins_a
        votes[:, b] += ~wins_a
        margins[:, a] += f
        margins[:, b] -= f

    out: list[str] = []
    for r in range(n):
        best = np.flatnonzero(votes[r] == votes[r].max())
        if best.size > 1:
            tied = best[margins[r, best] == margins[r, best].max()]
            best = tied
        out.append(model.classes[int(best[0])])
    return out


def model_digest(model: OneVsOneEnsemble, standardizer: Standardizer | None = None) -> str:
    """Stable hash of all trained parameters, for leakage/determinism audits."""
    h = hashlib.sha256()
    if standardizer is not None:
        h.update(standardizer.mean.tobytes())
        h.update(standardizer.std.tobytes())
    for key in sorted(model.machines):
        machine = model.machines[key]
        h.update(str(key).encode())
        h.update(machine.weights.tobytes())
        h.update(np.float64(machine.bias).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Text serialization (versioned)

_FORMAT_HEADER = "laughkit-svm 1"


def _fmt_vec(v: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in v)


def model_to_text(model: OneVsOneEnsemble, standardizer: Standardizer) -> str:
    lines = [_FORMAT_HEADER]
    lines.append("classes " + " ".join(model.classes))
    lines.append("mean " + _fmt_vec(standardizer.mean))
    lines.append("std " + _fmt_vec(standardizer.std))
    for (a, b), machine in sorted(model.machines.items()):
        lines.append(f"pair {a} {b}")
        lines.append("bias " + repr(float(machine.bias)))
        lines.append("weights " + _fmt_vec(machine.weights))
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> tuple[OneVsOneEnsemble, Standardizer]:
    lines = text.strip().split("\n")
    if lines[0] != _FORMAT_HEADER:
        raise ValueError(f"unsupported model format {lines[0]!r}")
    classes = tuple(lines[1].split()[1:])
    mean = np.array([float(v) for v in lines[2].split()[1:]])
    std = np.array([float(v) for v in lines[3].split()[1:]])
    machines: dict[tuple[int, int], BinarySvm] = {}
    i = 4
    while i < len(lines):
        _, a, b = lines[i].split()
        bias = float(lines[i + 1].split()[1])
        weights = np.array([float(v) for v in lines[i + 2].split()[1:]])
        machines[(int(a), int(b))] = BinarySvm(
            weights=weights,
            bias=bias,
            support_indices=np.empty(0, dtype=int),
            support_coef=np.empty(0),
            support_vectors=np.empty((0, weights.size)),
            C=DEFAULT_C,
            n_iter=0,
            residual=0.0,
        )
        i += 3
    return OneVsOneEnsemble(classes=classes, machines=machines), Standardizer(mean=mean, std=std)
