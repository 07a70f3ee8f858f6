"""Distance kernels for the linking integrals.

Two families live here, both functions of the geodesic distance alpha:

* ``phi(k, l, alpha)``  -- the sweep kernel
  integral over beta in [alpha, pi] of sin^k(beta - alpha) sin^l(beta),
  which weights the direct linking integrand as phi / sin^n(alpha);

* ``convolution(k, l, alpha)`` -- the circular convolution
  integral over beta in [0, pi] of sin^k(alpha - beta) sin^l(beta),
  which weights the antipodally-paired variant.

Closed forms are installed exactly for the small cases where they exist as
simple expressions; every other (k, l) is evaluated by adaptive
Gauss-Legendre quadrature to 1e-12 absolute.  phi(k,l) = phi(l,k) holds for
all orders, and the two kernels are tied together by

    phi(k, l, alpha) + (-1)^k phi(k, l, pi - alpha)
        = (-1)^k convolution(k, l, alpha).

The ratio phi / sin^n is finite but 0/0 at alpha = pi; near that endpoint
it is evaluated by a second-order moment expansion instead of the quotient
(switchover at pi - 1e-3, the two branches agree to well under 1e-9 there).
"""

import math
from functools import lru_cache

import numpy as np

__all__ = ["KernelEvaluator", "phi", "phi_kernel_ratio", "convolution",
           "get_evaluator", "stable_sin"]

ABS_TOL = 1e-12
RATIO_SWITCH = np.pi - 1e-3

# Tail of pi dropped by float64; (np.pi - alpha) + _PI_LO recovers the true
# pi - alpha to full precision, consistent with libm's argument reduction.
# Without it, the closed forms lose ~1e-16 absolute near alpha = pi, which
# the kernel ratio amplifies by 1/sin^n.
_PI_LO = 1.2246467991473532e-16


def _eps_from_pi(alpha):
    """pi - alpha with the two-part-pi correction."""
    return (np.pi - alpha) + _PI_LO

# (k, l) pairs with installed closed forms.
PHI_CLOSED = {(0, 0), (1, 1), (1, 2), (2, 1)}
CONV_CLOSED = {(1, 1), (2, 2)}

_MAX_PANEL = 4096


@lru_cache(maxsize=64)
def _gl_nodes(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w  # rescaled to [0, 1]


def _clenshaw(x: np.ndarray, coeffs: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    """Chebyshev series evaluation; cache-blocked, much faster than chebval
    on large inputs."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty_like(flat)
    nd = len(coeffs)
    for s in range(0, flat.size, chunk):
        xx = flat[s : s + chunk]
        x2 = 2.0 * xx
        b0 = np.full_like(xx, coeffs[-1])
        b1 = np.zeros_like(xx)
        for j in range(nd - 2, -1, -1):
            b0, b1 = coeffs[j] + x2 * b0 - b1, b0
        out[s : s + chunk] = b0 - xx * b1
    return out.reshape(x.shape)


def _trim_coeffs(coeffs: np.ndarray) -> np.ndarray:
    mags = np.abs(coeffs)
    keep = np.nonzero(mags > 1e-15 * mags.max())[0]
    return coeffs[: int(keep.max()) + 1] if keep.size else coeffs[:1]


def stable_sin(alpha):
    """sin(alpha) for alpha in [0, pi] with full relative accuracy at both
    ends, using sin(alpha) = sin(pi - alpha) on the upper half."""
    alpha = np.asarray(alpha, dtype=float)
    return np.sin(np.minimum(alpha, _eps_from_pi(alpha)))


def _phi_closed(k: int, l: int, alpha):
    if (k, l) == (0, 0):
        return _eps_from_pi(alpha)
    if (k, l) == (1, 1):
        return 0.5 * (_eps_from_pi(alpha) * np.cos(alpha) + np.sin(alpha))
    # (1, 2) and (2, 1) share the same kernel by symmetry
    return (1.0 + np.cos(alpha)) ** 2 / 3.0


def _phi_panel(k: int, l: int, alpha, m: int):
    # phi = eps * int_0^1 sin^k(eps (1-w)) sin^l(eps w) dw  with eps = pi - alpha.
    # This substituted form keeps full relative precision as alpha -> pi.
    w, q = _gl_nodes(m)
    eps_flat = _eps_from_pi(alpha)
    eps = eps_flat[..., None]
    vals = np.sin(eps * (1.0 - w)) ** k * np.sin(eps * w) ** l
    return (vals @ q) * eps_flat


def _phi_numeric(k: int, l: int, alpha, start_nodes: int = 48):
    alpha = np.asarray(alpha, dtype=float)
    m = max(16, int(start_nodes))
    prev = _phi_panel(k, l, alpha, m)
    while m <= _MAX_PANEL:
        m *= 2
        cur = _phi_panel(k, l, alpha, m)
        if float(np.max(np.abs(cur - prev))) < ABS_TOL:
            return cur
        prev = cur
    raise RuntimeError(f"phi({k},{l}) quadrature did not converge to {ABS_TOL}")


def _conv_panel(k: int, l: int, alpha, m: int):
    w, q = _gl_nodes(m)
    beta = np.pi * w
    vals = np.sin(alpha[..., None] - beta) ** k * np.sin(beta) ** l
    return np.pi * (vals @ q)


def _conv_numeric(k: int, l: int, alpha, start_nodes: int = 48):
    alpha = np.asarray(alpha, dtype=float)
    m = max(16, int(start_nodes))
    prev = _conv_panel(k, l, alpha, m)
    while m <= _MAX_PANEL:
        m *= 2
        cur = _conv_panel(k, l, alpha, m)
        if float(np.max(np.abs(cur - prev))) < ABS_TOL:
            return cur
        prev = cur
    raise RuntimeError(f"convolution({k},{l}) quadrature did not converge")


def _ratio_series_coeffs(k: int, l: int):
    # phi(pi - eps) / sin^n(pi - eps) = B (1 + C1 eps^2 + O(eps^4)) where
    # B = k! l! / n! and C1 collects the cubic corrections of sin on both
    # factors of the integrand and of the sin^n denominator.
    n = k + l + 1
    b = math.factorial(k) * math.factorial(l) / math.factorial(n)
    c1 = (n - (k * (k + 1) * (k + 2) + l * (l + 1) * (l + 2)) / ((n + 1) * (n + 2))) / 6.0
    return b, c1


class KernelEvaluator:
    """Evaluator for the kernels of one (k, l) order pair.

    `mode` reports how phi is computed: "closed_form" for the cataloged
    small cases, "numeric" otherwise.  The numeric path additionally builds
    a read-only Chebyshev table at construction (single-threaded build, used
    concurrently afterwards) for the regularized factor
    psi(alpha) = phi(alpha) / (pi - alpha)^n, which keeps the ratio
    phi / sin^n accurate in a relative sense all the way to alpha = pi.
    The table is validated against direct quadrature at build time.
    """

    def __init__(self, k: int, l: int, numeric_nodes: int = 48):
        if k < 0 or l < 0 or int(k) != k or int(l) != l:
            raise ValueError("kernel orders must be nonnegative integers")
        if numeric_nodes < 16:
            raise ValueError("numeric_nodes must be at least 16")
        self.k = int(k)
        self.l = int(l)
        self.n = self.k + self.l + 1
        self.numeric_nodes = int(numeric_nodes)
        self.mode = "closed_form" if (k, l) in PHI_CLOSED else "numeric"
        self.conv_mode = "closed_form" if (k, l) in CONV_CLOSED else "numeric"
        self._series = _ratio_series_coeffs(self.k, self.l)
        self._psi_coeffs = None if self.mode == "closed_form" else self._build_psi_table()
        self._conv_coeffs = None if self.conv_mode == "closed_form" else self._build_conv_table()

    # -- construction of the read-only Chebyshev tables ---------------------

    def _build_psi_table(self):
        deg = 64
        while deg <= 512:
            nodes = np.cos(np.pi * np.arange(deg + 1) / deg)  # Chebyshev extrema
            alpha = 0.5 * np.pi * (nodes + 1.0)
            psi = self._psi_direct(alpha)
            coeffs = _trim_coeffs(np.polynomial.chebyshev.chebfit(nodes, psi, deg))
            # validate the table against the adaptive quadrature path
            check = np.linspace(0.0, np.pi, 257)
            approx = self._psi_from_table(check, coeffs) * _eps_from_pi(check) ** self.n
            exact = _phi_numeric(self.k, self.l, check)
            if float(np.max(np.abs(approx - exact))) < 5e-13 * max(1.0, float(np.max(np.abs(exact)))):
                return coeffs
            deg *= 2
        raise RuntimeError(f"psi table for ({self.k},{self.l}) failed to converge")

    def _psi_direct(self, alpha):
        # psi = phi / (pi - alpha)^n; the substituted quadrature form divides
        # out the (pi - alpha)^n prefactor analytically, so this stays exact
        # at alpha = pi where it takes the value k! l! / n!.
        w, q = _gl_nodes(256)
        eps = _eps_from_pi(np.asarray(alpha, dtype=float))[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            f1 = np.where(eps > 0, np.sin(eps * (1 - w)) / np.where(eps > 0, eps, 1.0), 1.0 - w)
            f2 = np.where(eps > 0, np.sin(eps * w) / np.where(eps > 0, eps, 1.0), w)
        return (f1**self.k * f2**self.l) @ q

    @staticmethod
    def _psi_from_table(alpha, coeffs):
        x = 2.0 * np.asarray(alpha, dtype=float) / np.pi - 1.0
        return _clenshaw(x, coeffs)

    def _build_conv_table(self):
        deg = 64
        while deg <= 512:
            nodes = np.cos(np.pi * np.arange(deg + 1) / deg)
            alpha = 0.5 * np.pi * (nodes + 1.0)
            vals = _conv_numeric(self.k, self.l, alpha)
            coeffs = _trim_coeffs(np.polynomial.chebyshev.chebfit(nodes, vals, deg))
            check = np.linspace(0.0, np.pi, 257)
            approx = _clenshaw(2 * check / np.pi - 1, coeffs)
            exact = _conv_numeric(self.k, self.l, check)
            if float(np.max(np.abs(approx - exact))) < 5e-13 * max(1.0, float(np.max(np.abs(exact)))):
                return coeffs
            deg *= 2
        raise RuntimeError(f"convolution table for ({self.k},{self.l}) failed to converge")

    # -- evaluation ----------------------------------------------------------

    def phi(self, alpha):
        """Sweep kernel, closed form when cataloged, else direct quadrature."""
        alpha = np.asarray(alpha, dtype=float)
        _check_alpha_range(alpha)
        if self.mode == "closed_form":
            return _maybe_scalar(_phi_closed(self.k, self.l, alpha))
        return _maybe_scalar(_phi_numeric(self.k, self.l, alpha, self.numeric_nodes))

    def phi_fast(self, alpha):
        """Sweep kernel via the table (numeric orders); same value as phi."""
        alpha = np.asarray(alpha, dtype=float)
        if self.mode == "closed_form":
            return _phi_closed(self.k, self.l, alpha)
        return self._psi_from_table(alpha, self._psi_coeffs) * _eps_from_pi(alpha) ** self.n

    def kernel_ratio(self, alpha):
        """phi(alpha) / sin^n(alpha) with the endpoint handled by series.

        Finite on (0, pi]; tends to k! l! / n! at alpha = pi.  Raises for
        alpha below 1e-8, where the ratio diverges like alpha^{-n} and the
        disjointness hypothesis of the linking integral is violated.
        """
        alpha = np.asarray(alpha, dtype=float)
        _check_alpha_range(alpha)
        if float(np.min(alpha)) < 1e-8:
            raise ValueError(
                "kernel ratio requested at alpha < 1e-8; the integrand is "
                "unbounded there (points of K and L nearly coincide)"
            )
        b, c1 = self._series
        eps = _eps_from_pi(alpha)
        series = b * (1.0 + c1 * eps * eps)
        near = alpha > RATIO_SWITCH
        safe_alpha = np.where(near, 0.5 * np.pi, alpha)
        if self.mode == "closed_form":
            quotient_num = _phi_closed(self.k, self.l, safe_alpha)
        else:
            quotient_num = self.phi_fast(safe_alpha)
        quotient = quotient_num / stable_sin(safe_alpha) ** self.n
        return _maybe_scalar(np.where(near, series, quotient))

    def convolution(self, alpha):
        """Circular convolution kernel, closed form when cataloged."""
        alpha = np.asarray(alpha, dtype=float)
        _check_alpha_range(alpha)
        if (self.k, self.l) == (1, 1):
            return _maybe_scalar(-0.5 * np.pi * np.cos(alpha))
        if (self.k, self.l) == (2, 2):
            return _maybe_scalar(np.pi / 8.0 * (1.0 + 2.0 * np.cos(alpha) ** 2))
        return _maybe_scalar(_conv_numeric(self.k, self.l, alpha, self.numeric_nodes))

    def convolution_fast(self, alpha):
        """Convolution via the table (numeric orders); same value."""
        alpha = np.asarray(alpha, dtype=float)
        if self.conv_mode == "closed_form":
            return self.convolution(alpha)
        return _clenshaw(2.0 * alpha / np.pi - 1.0, self._conv_coeffs)


def _maybe_scalar(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def _check_alpha_range(alpha):
    if alpha.size and (float(np.min(alpha)) < -1e-12 or float(np.max(alpha)) > np.pi + 1e-12):
        raise ValueError("alpha must lie in [0, pi]")


@lru_cache(maxsize=128)
def get_evaluator(k: int, l: int) -> KernelEvaluator:
    """Shared evaluator cache; tables are built once per order pair."""
    return KernelEvaluator(k, l)


def phi(k: int, l: int, alpha):
    """Sweep kernel: integral of sin^k(beta - alpha) sin^l(beta) over [alpha, pi]."""
    return get_evaluator(k, l).phi(alpha)


def phi_kernel_ratio(k: int, l: int, alpha):
    """phi(k, l, alpha) / sin^n(alpha) for n = k + l + 1, endpoint-safe at pi."""
    return get_evaluator(k, l).kernel_ratio(alpha)


def convolution(k: int, l: int, alpha):
    """Convolution kernel: integral of sin^k(alpha - beta) sin^l(beta) over [0, pi]."""
    return get_evaluator(k, l).convolution(alpha)
