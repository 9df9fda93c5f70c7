"""Spectral temporal basis with compact frequency support.

The basis spans a 2(N+1)-dimensional space U of real functions on the whole
time axis.  The first family (indices 0..N, "cos family") is defined through
frequency-domain hat functions on the grid ``omega_j = j*tau``; the second
family (indices N+1..2N+1, "sin family") is the Hilbert transform of the
first.  In the time domain, with ``g(x) = (1 - cos x)/x**2``,

    b_0(t)      = (tau/pi) * g(tau*t)
    b_j(t)      = (2*tau/pi) * g(tau*t) * cos(j*tau*t),    1 <= j <= N
    b_{N+1}(t)  = (tau/pi) * (tau*t - sin(tau*t)) / (tau*t)**2
    b_{N+1+j}(t)= (2*tau/pi) * g(tau*t) * sin(j*tau*t),    1 <= j <= N.

Fourier convention: ``F v(w) = int v(t) exp(-i w t) dt`` with inverse
``(1/2pi) int g(w) exp(i w t) dw``.  Under this convention the time-domain
formulas above are exactly the inverse transforms of the frequency hats, and
every L2 pairing carries a 1/(2pi) Plancherel factor which the Gram matrices
below include, so ``gram(basis, "mass")`` is the true L2(R) Gram matrix.

Gram matrices follow the bilinear-form convention ``G[j, l] = form(b_j, b_l)``
(first argument indexes rows); for the skew pairing the first argument is the
one carrying the "+" half-derivative.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameterError

GRAM_KINDS = ("mass", "half_plus_minus", "half_plus_plus", "quarter_quarter")

# weight exponent p in |xi|^p for the frequency-domain integrals of each kind
_WEIGHT_POWER = {"mass": 0.0, "half_plus_plus": 1.0, "quarter_quarter": 0.5}

# switch-over to 4th-order Taylor expansions of (1-cos x)/x^2 and (x-sin x)/x^2
_SMALL_ARG = 1.0e-4


@dataclass(frozen=True)
class TemporalBasis:
    """Descriptor of the spectral space: N+1 frequency bands of width tau.

    ``num_bands`` is the largest band index N; the frequency grid is
    ``omega_j = j*tau`` for j = -N..N and each basis element occupies at most
    two adjacent bands around +-j*tau.
    """

    num_bands: int
    tau: float

    def __post_init__(self):
        if self.num_bands < 1:
            raise InvalidParameterError(f"need num_bands >= 1, got {self.num_bands}")
        if not self.tau > 0.0:
            raise InvalidParameterError(f"need tau > 0, got {self.tau}")

    @property
    def dim(self) -> int:
        return 2 * (self.num_bands + 1)

    def cos_index(self, j: int) -> int:
        return j

    def sin_index(self, j: int) -> int:
        return self.num_bands + 1 + j

    def _split(self, idx: int):
        """Map a flat basis index to (band j, is_sin_family)."""
        if not 0 <= idx < self.dim:
            raise InvalidParameterError(f"basis index {idx} out of range [0, {self.dim})")
        n = self.num_bands + 1
        return (idx - n, True) if idx >= n else (idx, False)


@dataclass(frozen=True)
class TemporalGram:
    kind: str
    matrix: sp.csr_matrix


def new_basis(num_bands: int, tau: float) -> TemporalBasis:
    return TemporalBasis(num_bands, tau)


def fourier_eval(basis: TemporalBasis, idx: int, omega: float) -> complex:
    """Fourier transform of basis element ``idx`` at frequency ``omega``.

    The cos-family transforms are the real frequency hats; the sin family
    picks up the Hilbert multiplier ``-i*sgn(omega)``.
    """
    j, is_sin = basis._split(idx)
    hat = max(0.0, 1.0 - abs(abs(omega) - j * basis.tau) / basis.tau)
    if is_sin:
        return complex(0.0, -np.sign(omega) * hat)
    return complex(hat, 0.0)


def basis_values(basis: TemporalBasis, t) -> np.ndarray:
    """Evaluate all basis elements at times ``t``; returns (dim, len(t)).

    Uses Taylor expansions below |tau*t| = 1e-4 to avoid the cancellation in
    1 - cos(tau*t); both branches agree to ~1e-12 at the switch-over.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = basis.num_bands + 1
    theta = basis.tau * t
    small = np.abs(theta) < _SMALL_ARG
    g = np.empty_like(theta)
    g2 = np.empty_like(theta)
    ts = theta[small]
    g[small] = 0.5 - ts**2 / 24.0 + ts**4 / 720.0
    g2[small] = ts / 6.0 - ts**3 / 120.0
    tb = theta[~small]
    g[~small] = (1.0 - np.cos(tb)) / tb**2
    g2[~small] = (tb - np.sin(tb)) / tb**2

    out = np.empty((2 * n, t.size))
    scale = basis.tau / np.pi
    out[0] = scale * g
    out[n] = scale * g2
    if basis.num_bands >= 1:
        ang = np.outer(np.arange(1, n), theta)
        out[1:n] = (2.0 * scale) * g * np.cos(ang)
        out[n + 1 :] = (2.0 * scale) * g * np.sin(ang)
    return out


def time_eval(basis: TemporalBasis, idx: int, t: float) -> float:
    """Pointwise time-domain value of basis element ``idx``."""
    basis._split(idx)  # index range check
    return float(basis_values(basis, t)[idx, 0])


def _band_integrals(basis: TemporalBasis, power: float) -> np.ndarray:
    """Within-family integrals S[j, l] = (1/pi) int_0^inf xi^p hat_j hat_l dxi.

    On the positive axis ``hat_j`` is the unit hat at j*tau with half-width
    tau (for j = 0 only its descending half lies in xi >= 0).  Products of
    hats are piecewise quadratics, so xi^p times them integrates exactly by
    the power rule; entries vanish beyond band distance 1.
    """
    tau, n = basis.tau, basis.num_bands + 1
    p = power

    def pieces(j):
        c = j * tau
        asc = (1.0 - c / tau, 1.0 / tau)   # 1 - (c - xi)/tau on [c - tau, c]
        desc = (1.0 + c / tau, -1.0 / tau)  # 1 - (xi - c)/tau on [c, c + tau]
        if j == 0:
            return [(0.0, tau, desc)]
        return [(c - tau, c, asc), (c, c + tau, desc)]

    def integrate(x0, x1, lin1, lin2):
        a1, b1 = lin1
        a2, b2 = lin2
        coef = (a1 * a2, a1 * b2 + a2 * b1, b1 * b2)
        total = 0.0
        for k, c in enumerate(coef):
            q = p + k + 1
            total += c * (x1**q - x0**q) / q
        return total

    diag = np.zeros(n)
    off = np.zeros(n - 1)
    for j in range(n):
        for l in (j, j + 1):
            if l >= n:
                continue
            val = 0.0
            for a0, a1, lin1 in pieces(j):
                for b0, b1, lin2 in pieces(l):
                    lo, hi = max(a0, b0), min(a1, b1)
                    if hi > lo:
                        val += integrate(lo, hi, lin1, lin2)
            val /= np.pi
            if l == j:
                diag[j] = val
            else:
                off[j] = val
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


def gram(basis: TemporalBasis, kind: str) -> TemporalGram:
    """Assemble the Gram matrix of the requested bilinear form.

    Kinds: "mass" is the L2(R) inner product; "half_plus_minus" the skew
    pairing of +/- half-derivatives (frequency weight i*xi); "half_plus_plus"
    the energy of the + half-derivative (weight |xi|); "quarter_quarter" the
    quarter-derivative energy (weight sqrt|xi|).  All entries are exact
    closed-form frequency integrals including the 1/(2pi) factor.
    """
    if kind not in GRAM_KINDS:
        raise InvalidParameterError(f"unknown gram kind {kind!r}; expected one of {GRAM_KINDS}")
    if kind == "half_plus_minus":
        b = _band_integrals(basis, 1.0)
        matrix = sp.bmat([[None, -b], [b, None]], format="csr")
    else:
        s = _band_integrals(basis, _WEIGHT_POWER[kind])
        matrix = sp.block_diag([s, s], format="csr")
    return TemporalGram(kind, matrix)


def hilbert_matrix(basis: TemporalBasis) -> np.ndarray:
    """Coefficient matrix of the Hilbert transform on the basis.

    Maps cos-family element j to sin-family element j and sin to minus cos,
    hence H @ H = -I exactly.
    """
    n = basis.num_bands + 1
    h = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    h[n + idx, idx] = 1.0
    h[idx, n + idx] = -1.0
    return h
