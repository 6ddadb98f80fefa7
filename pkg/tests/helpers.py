"""Shared helpers for the gradient checks."""

import numpy as np

from polyband.core import band_to_annotation
from polyband.demo import random_band
from polyband.gtfit import polygon_to_gt
from polyband.losses import CLAMP, LossConfig, objective, sigmoid

H_STEP = 1e-6
KINK_GUARD = 1e-4


def residuals(theta, gt_sides, text_rows, mapping, constrained):
    """All absolute-value arguments of the fit loss for the matched predictions."""
    params = theta.reshape(-1, 4, 5)[mapping[text_rows]]
    a2, a1, a0, e0, e1 = (params[..., i, None] for i in range(5))
    t_hat, d_hat = gt_sides[..., 0, :], gt_sides[..., 1, :]
    k = t_hat.shape[-1] - 1
    s = np.arange(k + 1) / k
    if constrained:
        t = e0 + (e1 - e0) * s
        return np.concatenate([(t - t_hat).ravel(), ((a2 * t + a1) * t + a0 - d_hat).ravel()])
    f = (a2 * t_hat + a1) * t_hat + a0
    return np.concatenate(
        [(f - d_hat).ravel(), (e0[..., 0] - t_hat[..., 0]).ravel(), (e1[..., 0] - t_hat[..., -1]).ravel()]
    )


def smooth_configs(count, constrained, seed=0, n=3, m=2, k=8):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        bands = [random_band(rng) for _ in range(m)]
        gt_sides = np.stack([polygon_to_gt(band_to_annotation(b, 7), k).arrays() for b in bands])
        theta = np.concatenate([b.flatten() for b in bands] + [random_band(rng).flatten()] * (n - m))
        theta = theta + rng.normal(0, 0.03, theta.shape)
        logits = rng.uniform(-4, 4, n)
        mapping = rng.permutation(n)
        text_rows = np.arange(m)
        c = sigmoid(logits)
        if np.any(c <= 10 * CLAMP) or np.any(c >= 1 - 10 * CLAMP):
            continue
        if np.min(np.abs(residuals(theta, gt_sides, text_rows, mapping, constrained))) < KINK_GUARD:
            continue
        out.append((theta, logits, gt_sides, text_rows, mapping))
    return out


def numeric_gradient(f, x):
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp.flat[i] += H_STEP
        xm.flat[i] -= H_STEP
        g.flat[i] = (f(xp) - f(xm)) / (2 * H_STEP)
    return g


def max_relative_error(configs, constrained, cfg=LossConfig()):
    """Largest relative deviation between analytic and central-difference gradients."""
    worst = 0.0
    for theta, logits, gt_sides, rows, mapping in configs:
        _, grad = objective(theta, logits, gt_sides, rows, mapping, cfg, constrained)
        fd_theta = numeric_gradient(
            lambda t: objective(t, logits, gt_sides, rows, mapping, cfg, constrained, need_grad=False), theta
        )
        fd_logit = numeric_gradient(
            lambda z: objective(theta, z, gt_sides, rows, mapping, cfg, constrained, need_grad=False), logits
        )
        analytic = np.concatenate([grad.bands.ravel(), grad.logits])
        numeric = np.concatenate([fd_theta.ravel(), fd_logit])
        worst = max(worst, np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12))
    return worst
