"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_kernels`` extension; ``flair_lab.kernels`` picks one at import time.
"""
import numpy as np


def mixture_moments(x, t, log_weights, means, variances):
    """Posterior mean of x0 and marginal score for an isotropic mixture on the linear path.

    Parameters
    ----------
    x : ndarray, shape (n, d)
        Points on the path at time ``t``.
    t : float
    log_weights : ndarray, shape (k,)
    means : ndarray, shape (k, d)
    variances : ndarray, shape (k,)

    Returns
    -------
    post_mean : ndarray, shape (n, d)
        E[x0 | x_t].
    score : ndarray, shape (n, d)
        Gradient of the log marginal density at time ``t``.
    """
    d = x.shape[1]
    a = 1.0 - t
    s2 = a * a * variances + t * t                       # (k,)
    shifted = a * means                                  # (k, d)
    diff = x[:, None, :] - shifted[None, :, :]           # (n, k, d)
    sq = np.einsum("nkd,nkd->nk", diff, diff)
    logp = log_weights - 0.5 * d * np.log(s2) - 0.5 * sq / s2
    logp -= logp.max(axis=1, keepdims=True)
    resp = np.exp(logp)
    resp /= resp.sum(axis=1, keepdims=True)
    comp_score = -diff / s2[None, :, None]
    score = np.einsum("nk,nkd->nd", resp, comp_score)
    gain = a * variances / s2                            # (k,)
    comp_mean = means[None, :, :] + gain[None, :, None] * diff
    post_mean = np.einsum("nk,nkd->nd", resp, comp_mean)
    return post_mean, score


def circular_convolve_rows(x, kernel):
    """Centered circular convolution of every row of ``x`` with an odd-length kernel."""
    c = kernel.shape[0] // 2
    out = np.zeros_like(x)
    for j, kj in enumerate(kernel):
        out += kj * np.roll(x, j - c, axis=1)
    return out
