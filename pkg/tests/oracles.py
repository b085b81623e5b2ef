"""Independent reference implementations used as oracles by the tests.

Everything here trades speed for obviousness: scalar loops, bisection,
and brute-force scans. Nothing imports from livediff, so a bug in the
package cannot leak into the reference results.
"""

import math

import numpy as np


def conductance_scalar(grad_mag, kappa, kind):
    r = (grad_mag / kappa) ** 2
    if kind == "exponential":
        return math.exp(-r)
    return 1.0 / (1.0 + r)


def diffuse_scalar(pixels, iterations, lam, kappa, kind):
    """Four-neighbor diffusion as nested Python loops, replicate boundary."""
    img = [[float(v) for v in row] for row in np.asarray(pixels)]
    h, w = len(img), len(img[0])
    for _ in range(iterations):
        out = [[0.0] * w for _ in range(h)]
        for i in range(h):
            for j in range(w):
                v = img[i][j]
                north = img[i - 1][j] - v if i > 0 else 0.0
                south = img[i + 1][j] - v if i < h - 1 else 0.0
                east = img[i][j + 1] - v if j < w - 1 else 0.0
                west = img[i][j - 1] - v if j > 0 else 0.0
                flow = 0.0
                for g in (north, south, east, west):
                    flow += conductance_scalar(abs(g), kappa, kind) * g
                out[i][j] = v + lam * flow
        img = out
    return np.array(img)


def bilinear_scalar(pixels, out_w, out_h):
    """Pixel-center bilinear resampling, one output pixel at a time."""
    src = np.asarray(pixels, dtype=float)
    h, w = src.shape
    out = np.zeros((out_h, out_w))
    for i in range(out_h):
        for j in range(out_w):
            y = min(max((i + 0.5) * h / out_h - 0.5, 0.0), h - 1.0)
            x = min(max((j + 0.5) * w / out_w - 0.5, 0.0), w - 1.0)
            y0, x0 = int(math.floor(y)), int(math.floor(x))
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = y - y0, x - x0
            top = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
            bottom = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
            out[i, j] = top * (1.0 - fy) + bottom * fy
    return out


def sq_dists_naive(rows):
    """Row-pairwise squared distances with an explicit accumulation loop."""
    rows = np.asarray(rows, dtype=float)
    k = rows.shape[0]
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            acc = 0.0
            for a, b in zip(rows[i], rows[j]):
                acc += (a - b) * (a - b)
            out[i, j] = acc
    return out


def pca_eigh_oracle(columns, lowd):
    """Top-lowd eigenpairs of the column scatter via direct eigendecomposition.

    Returns (mean, eigenvalues descending, directions as rows). Signs are
    left arbitrary; callers compare sign-insensitive quantities.
    """
    cols = np.asarray(columns, dtype=float)
    mean = cols.mean(axis=1)
    centered = cols - mean[:, None]
    scatter = centered @ centered.T
    vals, vecs = np.linalg.eigh(scatter)
    order = np.argsort(vals)[::-1][:lowd]
    return mean, vals[order], vecs[:, order].T


def project_box_hyperplane(v, p, C):
    """Euclidean projection onto {0 <= a <= C, sum a*p = 0} by bisection.

    The projection is clip(v - theta*p, 0, C) for the theta that zeroes
    g(theta) = p . clip(v - theta*p, 0, C), and g is non-increasing.
    """
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)

    def g(theta):
        return float(p @ np.clip(v - theta * p, 0.0, C))

    span = float(np.max(np.abs(v)) + C + 1.0)
    lo, hi = -span, span
    while g(lo) < 0.0:
        lo *= 2.0
    while g(hi) > 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * p, 0.0, C)


def qp_oracle(K, p, C, max_iters=200000, tol=1e-12):
    """Box-and-hyperplane SVM dual by dense projected gradient.

    Maximizes sum(a) - 0.5 a^T Q a with Q = (p p^T) * K. Returns
    (alpha, objective). Step size 1/lambda_max(Q) guarantees ascent.
    """
    K = np.asarray(K, dtype=float)
    p = np.asarray(p, dtype=float)
    Q = np.outer(p, p) * K
    lam_max = float(np.linalg.eigvalsh(Q).max())
    step = 1.0 / max(lam_max, 1e-12)
    alpha = project_box_hyperplane(np.zeros(p.size), p, C)
    for _ in range(max_iters):
        grad = 1.0 - Q @ alpha
        new = project_box_hyperplane(alpha + step * grad, p, C)
        moved = float(np.max(np.abs(new - alpha)))
        alpha = new
        if moved < tol:
            break
    objective = float(alpha.sum() - 0.5 * alpha @ Q @ alpha)
    return alpha, objective


def qp_oracle_bias(K, p, C, alpha):
    """Bias from the oracle's free support vectors, averaged.

    With no free vector, KKT leaves an interval: b >= v_i wherever
    (alpha=0, p=+1) or (alpha=C, p=-1), b <= v_i on the complement;
    the midpoint is returned.
    """
    p = np.asarray(p, dtype=float)
    u = (alpha * p) @ np.asarray(K, dtype=float)
    v = p - u
    free = (alpha > 1e-8 * C) & (alpha < C * (1.0 - 1e-8))
    if np.any(free):
        return float(np.mean(v[free]))
    at_zero = alpha <= 1e-8 * C
    lower = (at_zero & (p > 0)) | (~at_zero & (p < 0))
    upper = ~lower
    return float(0.5 * (np.max(v[lower], initial=-np.inf) + np.min(v[upper], initial=np.inf)))


def threshold_scan(scores, labels):
    """Exhaustive EER scan over midpoints of sorted unique scores.

    Tie order: |FAR - FRR|, then HTER, then the threshold itself.
    """
    uniq = sorted(set(scores))
    candidates = [float("-inf")]
    candidates += [0.5 * (a + b) for a, b in zip(uniq, uniq[1:])]
    candidates += [float("inf")]
    best_key, best_t = None, None
    for t in candidates:
        tp = sum(1 for s, l in zip(scores, labels) if l == "live" and s > t)
        fn = sum(1 for s, l in zip(scores, labels) if l == "live" and s <= t)
        fp = sum(1 for s, l in zip(scores, labels) if l == "fake" and s > t)
        tn = sum(1 for s, l in zip(scores, labels) if l == "fake" and s <= t)
        far = fp / (fp + tn)
        frr = fn / (fn + tp)
        key = (abs(far - frr), (far + frr) / 2.0, t)
        if best_key is None or key < best_key:
            best_key, best_t = key, t
    return best_t
