"""Reconstruction support: view-dependent trust masks and per-view
photometric homography alignment.

The mask weights pixels by how frontal the (bilaterally smoothed) surface is
to the camera; masks are normalized jointly over all views so the most
trusted pixel anywhere gets weight 1, then shaped by smoothstep and gamma.

The homography fit aligns a rendered view to an imperfect target by damped
Gauss-Newton on an IRLS-weighted photometric L1 error, coarse to fine, with
an analytic image Jacobian. Corrections are expected to stay near identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .shading import MaterialGBuffer


@dataclass(frozen=True)
class ViewMaskConfig:
    bilateral_spatial_sigma: float = 2.0  # pixels
    bilateral_range_sigma: float = 0.3  # normal-vector distance units
    smoothstep_lo: float = 0.3
    smoothstep_hi: float = 0.9
    gamma: float = 1.5

    def __post_init__(self):
        if self.bilateral_spatial_sigma <= 0 or self.bilateral_range_sigma <= 0:
            raise ValueError("bilateral sigmas must be positive")
        if not (0.0 <= self.smoothstep_lo < self.smoothstep_hi <= 1.0):
            raise ValueError("need 0 <= lo < hi <= 1 for the smoothstep window")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def _smoothstep(lo, hi, x):
    t = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def bilateral_filter_normals(normals, alpha, cfg: ViewMaskConfig, support: int = 5):
    """Edge-preserving smoothing of a decoded normal field (h, w, 3)."""
    h, w = normals.shape[:2]
    rad = support // 2
    acc = np.zeros_like(normals)
    wacc = np.zeros((h, w), dtype=np.float64)
    pad_n = np.pad(normals, ((rad, rad), (rad, rad), (0, 0)), mode="edge")
    pad_a = np.pad(alpha, ((rad, rad), (rad, rad)), mode="constant")
    inv_2ss = 1.0 / (2.0 * cfg.bilateral_spatial_sigma**2)
    inv_2rs = 1.0 / (2.0 * cfg.bilateral_range_sigma**2)
    for dy in range(-rad, rad + 1):
        for dx in range(-rad, rad + 1):
            shifted = pad_n[rad + dy : rad + dy + h, rad + dx : rad + dx + w]
            cover = pad_a[rad + dy : rad + dy + h, rad + dx : rad + dx + w] > 0.5
            dist2 = np.sum((shifted - normals) ** 2, axis=-1)
            wgt = np.exp(-(dx * dx + dy * dy) * inv_2ss - dist2 * inv_2rs) * cover
            acc += shifted * wgt[..., None]
            wacc += wgt
    filt = acc / np.maximum(wacc[..., None], 1e-12)
    norm = np.linalg.norm(filt, axis=-1, keepdims=True)
    return np.where(norm > 1e-9, filt / np.maximum(norm, 1e-12), normals)


def view_mask(frames: list[MaterialGBuffer], cfg: ViewMaskConfig = ViewMaskConfig()):
    """Per-view trust masks in [0, 1], jointly max-normalized across views."""
    if not frames:
        raise ValueError("view_mask needs at least one frame")
    raw = []
    for g in frames:
        n = g.decoded_normals()
        cover = g.alpha > 0.5
        n_hat = bilateral_filter_normals(n, g.alpha.astype(np.float64), cfg)
        w, h = g.resolution
        v = g.camera.view_directions(w, h)
        m = np.clip(np.sum(n_hat * v, axis=-1), 0.0, 1.0) * cover
        raw.append(m)
    peak = max(float(m.max()) for m in raw)
    if peak <= 0.0:
        raise ValueError("all masks are zero; no covered pixels face the camera")
    out = []
    for m in raw:
        m = _smoothstep(cfg.smoothstep_lo, cfg.smoothstep_hi, m / peak)
        out.append((m**cfg.gamma).astype(np.float32))
    return out


@dataclass
class Homography:
    """3x3 projective warp with the bottom-right entry pinned to 1."""

    matrix: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        if abs(m[2, 2]) < 1e-12:
            raise ValueError("bottom-right entry must be nonzero")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-9:
            raise ValueError("homography is singular")
        self.matrix = m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def apply(self, xy):
        """Map pixel coordinates (..., 2) through the warp."""
        xy = np.asarray(xy, dtype=np.float64)
        ones = np.ones(xy.shape[:-1] + (1,))
        p = np.concatenate([xy, ones], axis=-1) @ self.matrix.T
        return p[..., :2] / p[..., 2:]


def _bilinear(img, x, y):
    """Sample (h, w[, c]) at float pixel coords; returns (values, validity)."""
    h, w = img.shape[:2]
    valid = (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)
    x = np.clip(x, 0, w - 1)
    y = np.clip(y, 0, h - 1)
    x0 = np.minimum(np.floor(x).astype(np.int64), w - 2) if w > 1 else np.zeros_like(x, np.int64)
    y0 = np.minimum(np.floor(y).astype(np.int64), h - 2) if h > 1 else np.zeros_like(y, np.int64)
    x0 = np.maximum(x0, 0)
    y0 = np.maximum(y0, 0)
    fx = x - x0
    fy = y - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    v = (
        img[y0, x0] * (1 - fx) * (1 - fy)
        + img[y0, x0 + 1] * fx * (1 - fy)
        + img[y0 + 1, x0] * (1 - fx) * fy
        + img[y0 + 1, x0 + 1] * fx * fy
    )
    return v, valid


def warp(image: np.ndarray, h: Homography):
    """Inverse-mapped bilinear warp; returns (warped, validity mask).

    Output pixel p takes the input value at H^-1 p; samples falling outside
    the input are zero with validity 0.
    """
    image = np.asarray(image, dtype=np.float64)
    hh, ww = image.shape[:2]
    xs, ys = np.meshgrid(np.arange(ww, dtype=np.float64), np.arange(hh, dtype=np.float64))
    src = h.inverse().apply(np.stack([xs, ys], axis=-1))
    vals, valid = _bilinear(image, src[..., 0], src[..., 1])
    if image.ndim == 3:
        vals = np.where(valid[..., None], vals, 0.0)
    else:
        vals = np.where(valid, vals, 0.0)
    return vals, valid


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 50  # per pyramid level
    pyramid_levels: int = 3
    init_damping: float = 1e-3
    step_tolerance: float = 1e-8
    patience: int = 5
    irls_epsilon: float = 1e-3
    min_texture: float = 1e-4  # mean |gradient| below this is unobservable


@dataclass
class FitResult:
    homography: Homography
    loss: float
    diverged: bool
    iterations: int


def _to_gray(img):
    img = np.asarray(img, dtype=np.float64)
    return img.mean(axis=-1) if img.ndim == 3 else img


def _downsample2(img):
    h, w = img.shape[:2]
    return img[: h - h % 2, : w - w % 2].reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


# Level-k pixel centers sit at 2*p + 0.5 in level-(k-1) coordinates.
_DOWN = np.array([[0.5, 0.0, -0.25], [0.0, 0.5, -0.25], [0.0, 0.0, 1.0]])


def _rescale(m, to_coarser: bool):
    s = _DOWN if to_coarser else np.linalg.inv(_DOWN)
    out = s @ m @ np.linalg.inv(s)
    return out / out[2, 2]


def _l1_loss(rendered, target, g_mat):
    """Mean |rendered(G p) - target(p)| over valid pixels."""
    h, w = target.shape
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    q = np.stack([xs, ys, np.ones_like(xs)], axis=-1) @ g_mat.T
    u = q[..., 0] / q[..., 2]
    v = q[..., 1] / q[..., 2]
    vals, valid = _bilinear(rendered, u, v)
    res = np.abs(vals - target) * valid
    return res.sum() / max(valid.sum(), 1.0)


def _fit_level(rendered, target, g_mat, opts: FitOptions):
    """Damped Gauss-Newton refinement of the sampling homography G.

    G maps output pixels to source pixels (warped(p) = rendered(G p)); the
    returned matrix keeps that convention. Parameters live in normalized
    coordinates so translations and projective terms are comparably scaled.
    """
    h, w = target.shape
    s = max(w, h) / 2.0
    t_norm = np.array(
        [[1 / s, 0, -(w - 1) / (2 * s)], [0, 1 / s, -(h - 1) / (2 * s)], [0, 0, 1]]
    )
    t_inv = np.linalg.inv(t_norm)

    gy_img, gx_img = np.gradient(rendered)
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    p_n = np.stack([xs, ys, np.ones_like(xs)], axis=-1) @ t_norm.T
    x_n, y_n = p_n[..., 0], p_n[..., 1]

    g_n = t_norm @ g_mat @ t_inv
    g_n /= g_n[2, 2]
    loss_cur = _l1_loss(rendered, target, g_mat)
    damping = opts.init_damping
    fails = 0
    iterations = 0

    for iterations in range(1, opts.max_iterations + 1):
        q = p_n @ g_n.T
        q3 = q[..., 2]
        u_n = q[..., 0] / q3
        v_n = q[..., 1] / q3
        # back to source pixel coordinates for sampling
        u_pix = u_n * s + (w - 1) / 2.0
        v_pix = v_n * s + (h - 1) / 2.0
        warped, valid = _bilinear(rendered, u_pix, v_pix)
        iu, _ = _bilinear(gx_img, u_pix, v_pix)
        iv, _ = _bilinear(gy_img, u_pix, v_pix)
        iu = iu * s  # pixel-space gradient -> normalized-space gradient
        iv = iv * s

        res = (warped - target) * valid
        wgt = valid / np.sqrt(np.abs(res) + opts.irls_epsilon)

        inv_q3 = 1.0 / q3
        du = np.stack(
            [
                x_n * inv_q3, y_n * inv_q3, inv_q3,
                np.zeros_like(x_n), np.zeros_like(x_n), np.zeros_like(x_n),
                -u_n * x_n * inv_q3, -u_n * y_n * inv_q3,
            ],
            axis=-1,
        )
        dv = np.stack(
            [
                np.zeros_like(x_n), np.zeros_like(x_n), np.zeros_like(x_n),
                x_n * inv_q3, y_n * inv_q3, inv_q3,
                -v_n * x_n * inv_q3, -v_n * y_n * inv_q3,
            ],
            axis=-1,
        )
        jac = iu[..., None] * du + iv[..., None] * dv
        jw = jac * wgt[..., None]
        a = np.einsum("hwi,hwj->ij", jw, jw)
        b = -np.einsum("hwi,hw->i", jw, res * wgt)

        stepped = False
        for _ in range(8):
            try:
                delta = np.linalg.solve(a + damping * np.diag(np.diag(a)), b)
            except np.linalg.LinAlgError:
                break
            if not np.isfinite(delta).all():
                break
            cand_n = g_n + np.append(delta, 0.0).reshape(3, 3)
            cand = t_inv @ cand_n @ t_norm
            if abs(cand[2, 2]) < 1e-12:
                damping *= 10.0
                continue
            cand /= cand[2, 2]
            loss_new = _l1_loss(rendered, target, cand)
            if loss_new < loss_cur:
                g_mat = cand
                g_n = t_norm @ cand @ t_inv
                g_n /= g_n[2, 2]
                loss_cur = loss_new
                damping = max(damping / 3.0, 1e-9)
                stepped = True
                break
            damping *= 10.0
        if not stepped:
            fails += 1
            if fails >= opts.patience:
                break
            continue
        fails = 0
        if np.linalg.norm(delta) < opts.step_tolerance:
            break
    return g_mat, loss_cur, iterations


def fit_homography(
    rendered: np.ndarray,
    target: np.ndarray,
    init: Homography | None = None,
    opts: FitOptions = FitOptions(),
) -> FitResult:
    """Align `rendered` to `target`: minimize mean L1 of warp(rendered) - target.

    Returns the homography in the warp() convention (output = H applied to
    the rendered image). Textureless inputs are unobservable and return the
    identity flagged as diverged.
    """
    rendered_g = _to_gray(rendered)
    target_g = _to_gray(target)
    if rendered_g.shape != target_g.shape:
        raise ValueError("rendered and target must share a resolution")
    init = init or Homography.identity()

    texture = min(
        float(np.mean(np.abs(np.gradient(rendered_g)[0]) + np.abs(np.gradient(rendered_g)[1]))),
        float(np.mean(np.abs(np.gradient(target_g)[0]) + np.abs(np.gradient(target_g)[1]))),
    )
    init_loss = _l1_loss(rendered_g, target_g, init.inverse().matrix)
    if texture < opts.min_texture:
        return FitResult(Homography.identity(), init_loss, True, 0)

    pyr_r, pyr_t = [rendered_g], [target_g]
    while (
        len(pyr_r) < opts.pyramid_levels
        and min(pyr_r[-1].shape) >= 64
    ):
        pyr_r.append(_downsample2(pyr_r[-1]))
        pyr_t.append(_downsample2(pyr_t[-1]))

    g_mat = init.inverse().matrix
    for _ in range(len(pyr_r) - 1):
        g_mat = _rescale(g_mat, to_coarser=True)

    total_iters = 0
    for level in range(len(pyr_r) - 1, -1, -1):
        g_mat, loss, iters = _fit_level(pyr_r[level], pyr_t[level], g_mat, opts)
        total_iters += iters
        if level > 0:
            g_mat = _rescale(g_mat, to_coarser=False)

    final_loss = _l1_loss(rendered_g, target_g, g_mat)
    if final_loss <= init_loss:
        return FitResult(Homography(np.linalg.inv(g_mat)), final_loss, False, total_iters)
    return FitResult(init, init_loss, False, total_iters)


@dataclass
class OutlierGate:
    """Decides whether a view's warp is trusted, from albedo-loss deltas.

    A warp that raises the albedo loss by more than `rel_threshold` for
    `patience` consecutive evaluations marks the view for reinitialization.
    """

    rel_threshold: float = 0.2
    patience: int = 3
    consecutive: int = 0

    def update(self, loss_before: float, loss_after: float) -> str:
        if not (np.isfinite(loss_before) and np.isfinite(loss_after)):
            raise ValueError("losses must be finite")
        if loss_after > (1.0 + self.rel_threshold) * loss_before:
            self.consecutive += 1
        else:
            self.consecutive = 0
        if self.consecutive >= self.patience:
            self.consecutive = 0
            return "reinit"
        return "keep"


def outlier_gate(loss_before, loss_after, history: list | None = None,
                 rel_threshold: float = 0.2, patience: int = 3) -> str:
    """Stateless form: `history` holds prior (before, after) pairs, oldest first."""
    pairs = list(history or []) + [(loss_before, loss_after)]
    gate = OutlierGate(rel_threshold=rel_threshold, patience=patience)
    verdict = "keep"
    for before, after in pairs:
        verdict = gate.update(before, after)
    return verdict
