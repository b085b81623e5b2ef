"""Two-kernel SVM with learned convex kernel weights.

The classifier combines an RBF kernel over kernel-matrix feature vectors
with a linear kernel over deep feature vectors:

    f(x, y) = sum_i alpha_i p_i (c1 k1(x_i, x) + c2 k2(y_i, y)) + b

with c1 + c2 = 1, c >= 0. Training alternates an exact dual solve
(sequential minimal optimization, maximal-violating-pair selection) with
one projected-gradient step on the weight vector c, halving the step
until the outer objective 0.5*(c1^2 + c2^2) + J(c) does not increase.
J(c) is the optimal dual value at fixed c, so its gradient with respect
to c_t is -0.5 * sum_ij alpha_i alpha_j p_i p_j K_t[i, j].

DK vectors are standardized per coordinate and deep vectors L2-normalized
before their kernels; both statistics are frozen into the model so
prediction-time preprocessing is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, MalformedFile, SingleClass
from .featureio import read_json_doc, write_json_doc

MODEL_VERSION = "livediff-gmkl-1"

_STEP_FLOOR = 1e-12  # give up on the line search below this step size
_DESCENT_SLACK = 1e-9  # F(c) may not increase beyond this across outer iterations


@dataclass(frozen=True)
class GmklConfig:
    C: float = 1.0
    rbf_gamma: float = 0.5
    max_outer: int = 50
    max_smo_passes: int = 200_000
    tol_kkt: float = 1e-3
    tol_c: float = 1e-4
    c_step: float = 1.0

    def __post_init__(self):
        for name in ("C", "rbf_gamma", "max_outer", "max_smo_passes", "c_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("tol_kkt", "tol_c"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class TrainingSet:
    """Paired feature sets with +1 (live) / -1 (fake) labels."""

    dk: np.ndarray
    deep: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        dk = np.atleast_2d(np.asarray(self.dk, dtype=np.float64))
        deep = np.atleast_2d(np.asarray(self.deep, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.float64).reshape(-1)
        n = labels.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 samples, got {n}")
        if dk.shape[0] != n or deep.shape[0] != n:
            raise DimensionMismatch(
                f"dk has {dk.shape[0]} rows, deep {deep.shape[0]}, labels {n}"
            )
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        if np.all(labels > 0) or np.all(labels < 0):
            raise SingleClass("training set contains a single class")
        object.__setattr__(self, "dk", dk)
        object.__setattr__(self, "deep", deep)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class GmklModel:
    c: tuple[float, float]
    alpha: np.ndarray
    b: float
    support_indices: np.ndarray
    support_dk: np.ndarray  # standardized
    support_deep: np.ndarray  # L2-normalized
    support_labels: np.ndarray
    rbf_gamma: float
    dk_mean: np.ndarray
    dk_std: np.ndarray
    converged: bool
    config: GmklConfig


@dataclass(frozen=True)
class DualSolution:
    alpha: np.ndarray
    b: float
    objective: float
    converged: bool
    n_updates: int
    # one (sum_alpha_p, objective) entry per working-pair update when recorded
    history: tuple[tuple[float, float], ...] = field(default=())


def kernel_k1(x_a: np.ndarray, x_b: np.ndarray, gamma: float) -> float:
    """RBF kernel exp(-gamma * ||x_a - x_b||^2)."""
    x_a = np.asarray(x_a, dtype=np.float64).ravel()
    x_b = np.asarray(x_b, dtype=np.float64).ravel()
    if x_a.shape != x_b.shape:
        raise DimensionMismatch(f"k1 operands have lengths {x_a.size} and {x_b.size}")
    diff = x_a - x_b
    return float(np.exp(-gamma * np.dot(diff, diff)))


def kernel_k2(y_a: np.ndarray, y_b: np.ndarray) -> float:
    """Linear kernel y_a . y_b."""
    y_a = np.asarray(y_a, dtype=np.float64).ravel()
    y_b = np.asarray(y_b, dtype=np.float64).ravel()
    if y_a.shape != y_b.shape:
        raise DimensionMismatch(f"k2 operands have lengths {y_a.size} and {y_b.size}")
    return float(np.dot(y_a, y_b))


def combined_kernel(i: int, j: int, c: tuple[float, float], k1: np.ndarray, k2: np.ndarray) -> float:
    """Entry (i, j) of c1*K1 + c2*K2 from precomputed kernel matrices."""
    return float(c[0] * k1[i, j] + c[1] * k2[i, j])


def combine_kernels(c: tuple[float, float], k1: np.ndarray, k2: np.ndarray) -> np.ndarray:
    return c[0] * k1 + c[1] * k2


def project_simplex_2d(v: np.ndarray) -> tuple[float, float]:
    """Euclidean projection onto {c1 + c2 = 1, c >= 0}; exact for two weights."""
    c1 = float(min(max((v[0] - v[1] + 1.0) / 2.0, 0.0), 1.0))
    return (c1, 1.0 - c1)


def rbf_kernel_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """Rectangular RBF kernel between the rows of a and the rows of b."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"row lengths differ: {a.shape[1]} vs {b.shape[1]}")
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def solve_dual(
    kernel: np.ndarray,
    labels: np.ndarray,
    C: float,
    tol_kkt: float = 1e-3,
    max_updates: int = 200_000,
    record_history: bool = False,
) -> DualSolution:
    """Maximize the box-constrained SVM dual over a precomputed kernel.

    Sequential minimal optimization: each round picks the maximally
    KKT-violating pair (ties broken by lowest index), solves the
    two-variable subproblem exactly, and updates the cached decision
    values in O(N). Deterministic for fixed inputs. If the update budget
    runs out, the best (latest) iterate is returned with converged=False.
    """
    K = np.asarray(kernel, dtype=np.float64)
    p = np.asarray(labels, dtype=np.float64).reshape(-1)
    n = p.shape[0]
    if K.shape != (n, n):
        raise DimensionMismatch(f"kernel is {K.shape}, expected {(n, n)}")
    if not np.all(np.abs(K - K.T) <= 1e-8):
        raise ValueError("kernel matrix is not symmetric")
    if np.all(p > 0) or np.all(p < 0):
        raise SingleClass("dual solve requires both classes")

    alpha = np.zeros(n)
    u = np.zeros(n)  # u_i = sum_j alpha_j p_j K[i, j]
    snap = 1e-12 * max(1.0, C)
    history: list[tuple[float, float]] = []
    converged = False
    n_updates = 0

    while n_updates < max_updates:
        v = p - u  # per-sample KKT value; equals b on free support vectors
        up_mask = ((p > 0) & (alpha < C)) | ((p < 0) & (alpha > 0))
        low_mask = ((p < 0) & (alpha < C)) | ((p > 0) & (alpha > 0))
        if not up_mask.any() or not low_mask.any():
            converged = True
            break
        i = int(np.argmax(np.where(up_mask, v, -np.inf)))
        j = int(np.argmin(np.where(low_mask, v, np.inf)))
        if v[i] - v[j] <= tol_kkt:
            converged = True
            break

        # ascent direction: alpha_i moves by p_i*t, alpha_j by -p_j*t
        if p[i] > 0:
            lo_i, hi_i = -alpha[i], C - alpha[i]
        else:
            lo_i, hi_i = alpha[i] - C, alpha[i]
        if p[j] > 0:
            lo_j, hi_j = alpha[j] - C, alpha[j]
        else:
            lo_j, hi_j = -alpha[j], C - alpha[j]
        t_lo, t_hi = max(lo_i, lo_j), min(hi_i, hi_j)

        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta > 0:
            t = min(max((v[i] - v[j]) / eta, t_lo), t_hi)
        else:
            t = t_hi  # flat or degenerate curvature: slide to the ascent bound

        kappa = p[i] * alpha[i] + p[j] * alpha[j]
        new_i = alpha[i] + p[i] * t
        if new_i < snap:
            new_i = 0.0
        elif new_i > C - snap:
            new_i = C
        # re-derive the partner from the equality constraint, then snap its box
        new_j = p[j] * (kappa - p[i] * new_i)
        if new_j < snap:
            new_j = 0.0
        elif new_j > C - snap:
            new_j = C

        u += ((new_i - alpha[i]) * p[i]) * K[:, i] + ((new_j - alpha[j]) * p[j]) * K[:, j]
        alpha[i], alpha[j] = new_i, new_j
        n_updates += 1
        if record_history:
            history.append((float(np.dot(alpha, p)), _dual_objective(alpha, p, u)))
    else:
        converged = False

    return DualSolution(
        alpha=alpha,
        b=_bias(alpha, p, u, C),
        objective=_dual_objective(alpha, p, u),
        converged=converged,
        n_updates=n_updates,
        history=tuple(history),
    )


def _dual_objective(alpha: np.ndarray, p: np.ndarray, u: np.ndarray) -> float:
    return float(np.sum(alpha) - 0.5 * np.dot(alpha * p, u))


def _bias(alpha: np.ndarray, p: np.ndarray, u: np.ndarray, C: float) -> float:
    v = p - u
    free = (alpha > 0.0) & (alpha < C)
    if free.any():
        return float(np.mean(v[free]))
    up_mask = ((p > 0) & (alpha < C)) | ((p < 0) & (alpha > 0))
    low_mask = ((p < 0) & (alpha < C)) | ((p > 0) & (alpha > 0))
    if up_mask.any() and low_mask.any():
        return float((np.max(v[up_mask]) + np.min(v[low_mask])) / 2.0)
    if up_mask.any():
        return float(np.max(v[up_mask]))
    if low_mask.any():
        return float(np.min(v[low_mask]))
    return 0.0


def dual_gradient_wrt_c(
    k1: np.ndarray, k2: np.ndarray, alpha: np.ndarray, labels: np.ndarray
) -> np.ndarray:
    """Gradient of the optimal dual value J with respect to (c1, c2)."""
    ap = alpha * labels
    return np.array([-0.5 * float(ap @ k1 @ ap), -0.5 * float(ap @ k2 @ ap)])


def update_c(
    k1: np.ndarray,
    k2: np.ndarray,
    alpha: np.ndarray,
    labels: np.ndarray,
    c: tuple[float, float],
    c_step: float,
) -> tuple[float, float]:
    """One projected-gradient step on F(c) = 0.5*||c||^2 + J(c)."""
    grad_f = np.asarray(c) + dual_gradient_wrt_c(k1, k2, alpha, labels)
    return project_simplex_2d(np.asarray(c) - c_step * grad_f)


def train(
    data: TrainingSet,
    cfg: GmklConfig = GmklConfig(),
    trace_out: list | None = None,
) -> GmklModel:
    """Alternate exact dual solves with line-searched steps on c.

    c starts at (1/2, 1/2). Each outer round takes a projected-gradient
    step on c, halving the step until the outer objective does not
    increase (beyond 1e-9), and stops when c moves less than tol_c or no
    descent step exists. When trace_out is given, one record per accepted
    iterate is appended for inspection.
    """
    p = data.labels
    dk_mean = data.dk.mean(axis=0)
    dk_std = data.dk.std(axis=0)
    dk_std = np.where(dk_std == 0.0, 1.0, dk_std)
    x = (data.dk - dk_mean) / dk_std
    y = _l2_normalize_rows(data.deep)

    k1 = rbf_kernel_matrix(x, x, cfg.rbf_gamma)
    k1 = 0.5 * (k1 + k1.T)
    k2 = y @ y.T
    k2 = 0.5 * (k2 + k2.T)

    c = (0.5, 0.5)
    sol = solve_dual(
        combine_kernels(c, k1, k2), p, cfg.C, cfg.tol_kkt, cfg.max_smo_passes
    )
    f_val = 0.5 * (c[0] ** 2 + c[1] ** 2) + sol.objective
    if trace_out is not None:
        trace_out.append({"c": c, "objective": f_val, "dual": sol.objective})

    outer_converged = False
    for _ in range(cfg.max_outer):
        grad_f = np.asarray(c) + dual_gradient_wrt_c(k1, k2, sol.alpha, p)
        step = cfg.c_step
        accepted = None
        while step >= _STEP_FLOOR:
            c_new = project_simplex_2d(np.asarray(c) - step * grad_f)
            if c_new == c:
                break  # gradient points along the simplex normal; fixed point
            sol_new = solve_dual(
                combine_kernels(c_new, k1, k2), p, cfg.C, cfg.tol_kkt, cfg.max_smo_passes
            )
            f_new = 0.5 * (c_new[0] ** 2 + c_new[1] ** 2) + sol_new.objective
            if f_new <= f_val + _DESCENT_SLACK:
                accepted = (c_new, sol_new, f_new)
                break
            step /= 2.0
        if accepted is None:
            outer_converged = True
            break
        c_new, sol, f_val = accepted
        delta = max(abs(c_new[0] - c[0]), abs(c_new[1] - c[1]))
        c = c_new
        if trace_out is not None:
            trace_out.append({"c": c, "objective": f_val, "dual": sol.objective})
        if delta < cfg.tol_c:
            outer_converged = True
            break

    support = sol.alpha > 0.0
    idx = np.flatnonzero(support)
    return GmklModel(
        c=c,
        alpha=sol.alpha,
        b=sol.b,
        support_indices=idx,
        support_dk=x[idx],
        support_deep=y[idx],
        support_labels=p[idx],
        rbf_gamma=cfg.rbf_gamma,
        dk_mean=dk_mean,
        dk_std=dk_std,
        converged=bool(outer_converged and sol.converged),
        config=cfg,
    )


def score_samples(model: GmklModel, dk: np.ndarray, deep: np.ndarray) -> np.ndarray:
    """Decision values for rows of dk/deep; positive means live."""
    dk = np.atleast_2d(np.asarray(dk, dtype=np.float64))
    deep = np.atleast_2d(np.asarray(deep, dtype=np.float64))
    if dk.shape[1] != model.dk_mean.shape[0]:
        raise DimensionMismatch(
            f"dk vectors have length {dk.shape[1]}, model expects {model.dk_mean.shape[0]}"
        )
    if deep.shape[1] != model.support_deep.shape[1]:
        raise DimensionMismatch(
            f"deep vectors have length {deep.shape[1]}, "
            f"model expects {model.support_deep.shape[1]}"
        )
    if dk.shape[0] != deep.shape[0]:
        raise DimensionMismatch(
            f"{dk.shape[0]} dk rows paired with {deep.shape[0]} deep rows"
        )
    x = (dk - model.dk_mean) / model.dk_std
    y = _l2_normalize_rows(deep)
    k1 = rbf_kernel_matrix(x, model.support_dk, model.rbf_gamma)
    k2 = y @ model.support_deep.T
    weights = model.alpha[model.support_indices] * model.support_labels
    combined = model.c[0] * k1 + model.c[1] * k2
    return combined @ weights + model.b


def decision(model: GmklModel, x: np.ndarray, y: np.ndarray) -> float:
    """Decision value for one sample; a score of exactly 0 classifies as fake."""
    return float(score_samples(model, np.asarray(x).reshape(1, -1), np.asarray(y).reshape(1, -1))[0])


def classify(score: float) -> str:
    # ties go to fake: admitting an attack is the costlier error
    return "live" if score > 0.0 else "fake"


def save_model(path: str, model: GmklModel, meta: dict | None = None) -> None:
    doc = {
        "version": MODEL_VERSION,
        "meta": dict(meta) if meta else {},
        "c": list(model.c),
        "alpha": model.alpha.tolist(),
        "b": model.b,
        "support_indices": model.support_indices.tolist(),
        "support_dk": model.support_dk.tolist(),
        "support_deep": model.support_deep.tolist(),
        "support_labels": model.support_labels.tolist(),
        "rbf_gamma": model.rbf_gamma,
        "preprocessing": {
            "dk_mean": model.dk_mean.tolist(),
            "dk_std": model.dk_std.tolist(),
            "deep": "l2-normalize",
        },
        "converged": model.converged,
        "config": {
            "C": model.config.C,
            "rbf_gamma": model.config.rbf_gamma,
            "max_outer": model.config.max_outer,
            "max_smo_passes": model.config.max_smo_passes,
            "tol_kkt": model.config.tol_kkt,
            "tol_c": model.config.tol_c,
            "c_step": model.config.c_step,
        },
    }
    write_json_doc(path, doc)


def load_model_meta(path: str) -> dict:
    """Side-channel for pipeline settings frozen alongside the model."""
    doc = read_json_doc(path)
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise MalformedFile(f"{path}: model meta must be an object")
    return meta


def load_model(path: str) -> GmklModel:
    doc = read_json_doc(path)
    version = doc.get("version")
    if version != MODEL_VERSION:
        raise MalformedFile(f"{path}: unsupported model version {version!r}")
    cfg = GmklConfig(**doc["config"])
    return GmklModel(
        c=(float(doc["c"][0]), float(doc["c"][1])),
        alpha=np.asarray(doc["alpha"], dtype=np.float64),
        b=float(doc["b"]),
        support_indices=np.asarray(doc["support_indices"], dtype=np.intp),
        support_dk=np.atleast_2d(np.asarray(doc["support_dk"], dtype=np.float64)),
        support_deep=np.atleast_2d(np.asarray(doc["support_deep"], dtype=np.float64)),
        support_labels=np.asarray(doc["support_labels"], dtype=np.float64),
        rbf_gamma=float(doc["rbf_gamma"]),
        dk_mean=np.asarray(doc["preprocessing"]["dk_mean"], dtype=np.float64),
        dk_std=np.asarray(doc["preprocessing"]["dk_std"], dtype=np.float64),
        converged=bool(doc["converged"]),
        config=cfg,
    )


def _l2_normalize_rows(a: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=1)
    norms = np.where(norms == 0.0, 1.0, norms)
    return a / norms[:, None]
