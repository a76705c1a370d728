"""Window families, their Fourier transforms, moments and effective supports.

The central object is the Gaussian g(t) = exp(-t^2/2)/sqrt(2*pi) with
ghat(xi) = exp(-2*pi^2*xi^2), together with the derived windows
g1 = t*g, g2 = t^2*g, g3 = t*g' and the chirp-modulated transform

    G(xi) = F[exp(i*pi*phi''*sigma^2*u^2) * g(u)](xi),

which has a closed form for the Gaussian.  The chirp-window product
mu = 2*pi*phi''*sigma^2 is the single dimensionless number controlling
how much a linear chirp smears the window in frequency.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "WindowFamily",
    "ChirpedWindowTransform",
    "SupportUndefinedError",
    "gaussian_family",
    "effective_support",
    "chirped_transform",
    "g_jk",
]

QUAD_LIMIT = 40.0  # |tau| truncation for moment quadrature; Gaussian < 1e-300 beyond


class SupportUndefinedError(ValueError):
    """|G(xi)| never reaches tau0, so no effective support exists."""


@dataclass(frozen=True)
class WindowFamily:
    """A window g with derivatives, Fourier transform and absolute moments.

    ``moments[n]``  is I_n  = integral of |tau^n g(tau)|,
    ``dmoments[n]`` is I~_n = integral of |tau^n g'(tau)|, for n = 0..5.
    ``g0`` is g(0) (must be nonzero, it normalizes every inversion), and
    ``one_norm`` is the L1 norm of g.
    """

    name: str
    g: Callable[[np.ndarray], np.ndarray]
    gprime: Callable[[np.ndarray], np.ndarray]
    gsecond: Callable[[np.ndarray], np.ndarray]
    ghat: Callable[[np.ndarray], np.ndarray]
    g0: float
    moments: tuple[float, ...]
    dmoments: tuple[float, ...]
    one_norm: float

    def __post_init__(self):
        if self.g0 == 0:
            raise ValueError("g(0) must be nonzero")
        if len(self.moments) < 6 or len(self.dmoments) < 6:
            raise ValueError("moments through n=5 are required")
        if any(m <= 0 or not math.isfinite(m) for m in self.moments):
            raise ValueError("moments must be finite and positive")
        if any(m <= 0 or not math.isfinite(m) for m in self.dmoments):
            raise ValueError("derivative moments must be finite and positive")

    # derived windows used by the transform variants
    def g1(self, u):
        return u * self.g(u)

    def g2(self, u):
        return u ** 2 * self.g(u)

    def g3(self, u):
        return u * self.gprime(u)

    @property
    def is_gaussian(self) -> bool:
        return self.name == "gaussian"


def _abs_moment(f: Callable, n: int) -> float:
    val, _ = integrate.quad(lambda u: abs(u ** n * f(u)), -QUAD_LIMIT, QUAD_LIMIT,
                            epsrel=1e-10, epsabs=0.0, limit=400)
    return val


@functools.lru_cache(maxsize=None)
def gaussian_family() -> WindowFamily:
    """Unit Gaussian window, moments computed by adaptive quadrature."""
    c = 1.0 / math.sqrt(2.0 * math.pi)

    def g(u):
        u = np.asarray(u, dtype=float)
        return c * np.exp(-0.5 * u ** 2)

    def gprime(u):
        u = np.asarray(u, dtype=float)
        return -u * c * np.exp(-0.5 * u ** 2)

    def gsecond(u):
        u = np.asarray(u, dtype=float)
        return (u ** 2 - 1.0) * c * np.exp(-0.5 * u ** 2)

    def ghat(xi):
        xi = np.asarray(xi, dtype=float)
        return np.exp(-2.0 * np.pi ** 2 * xi ** 2)

    moments = tuple(_abs_moment(g, n) for n in range(6))
    dmoments = tuple(_abs_moment(gprime, n) for n in range(6))
    return WindowFamily(name="gaussian", g=g, gprime=gprime, gsecond=gsecond,
                        ghat=ghat, g0=c, moments=moments, dmoments=dmoments,
                        one_norm=moments[0])


def _bisect_decreasing(f: Callable[[float], float], target: float,
                       lo: float, hi: float, tol: float) -> float:
    """Root of f(x) = target for f decreasing on [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    if not (flo >= target >= fhi):
        raise SupportUndefinedError(
            f"target {target} not bracketed by f({lo})={flo}, f({hi})={fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def effective_support(family: WindowFamily, tau0: float) -> float:
    """The frequency radius alpha where |ghat| falls to tau0.

    Closed form for the Gaussian, alpha = sqrt(2*ln(1/tau0))/(2*pi);
    bisection on |ghat| to 1e-12 otherwise (|ghat| is assumed even and
    decreasing for xi >= 0).
    """
    if not (0.0 < tau0 < 1.0):
        raise ValueError("tau0 must lie strictly between 0 and 1")
    if family.is_gaussian:
        return math.sqrt(2.0 * math.log(1.0 / tau0)) / (2.0 * math.pi)
    return _bisect_decreasing(lambda x: abs(float(family.ghat(x))), tau0,
                              0.0, 1e6, 1e-12)


@dataclass(frozen=True)
class ChirpedWindowTransform:
    """Fourier transform of the chirp-modulated window and its support.

    For window g, chirp rate phi'' and width sigma, this represents
    G(xi) = F[exp(i*pi*phi''*sigma^2*u^2) g(u)](xi); mu = 2*pi*phi''*sigma^2.
    ``alpha_k`` solves |G(alpha_k)| = tau0.
    """

    family: WindowFamily
    sigma: float
    phi2: float
    tau0: float
    mu: float
    alpha_k: float
    monotone: bool = True

    def __call__(self, xi):
        return self.evaluate(xi)

    def evaluate(self, xi, order: int = 0):
        """G(xi) or one of its first two xi-derivatives."""
        xi = np.asarray(xi, dtype=float)
        if self.family.is_gaussian:
            return _gaussian_G_derivative(self.mu, xi, order)
        if order == 0:
            return _numeric_G(self.family, self.mu, xi)
        # 4th-order central differences on the numeric transform
        h = 1e-4
        if order == 1:
            vals = [_numeric_G(self.family, self.mu, xi + s * h) for s in (-2, -1, 1, 2)]
            return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
        if order == 2:
            vals = [_numeric_G(self.family, self.mu, xi + s * h) for s in (-2, -1, 0, 1, 2)]
            return (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3] - vals[4]) / (12 * h ** 2)
        raise ValueError("order must be 0, 1 or 2")

    def magnitude(self, xi):
        return np.abs(self.evaluate(xi))


def _gaussian_G_closed(mu: float, xi: np.ndarray) -> np.ndarray:
    # G(xi) = (1 - i*mu)^(-1/2) * exp(-2*pi^2*xi^2*(1 + i*mu)/(1 + mu^2))
    denom = 1.0 - 1j * mu
    return denom ** -0.5 * np.exp(-2.0 * np.pi ** 2 * xi ** 2 * (1.0 + 1j * mu) / (1.0 + mu ** 2))


def _gaussian_G_derivative(mu: float, xi: np.ndarray, order: int) -> np.ndarray:
    G = _gaussian_G_closed(mu, xi)
    if order == 0:
        return G
    beta = 2.0 * np.pi ** 2 * (1.0 + 1j * mu) / (1.0 + mu ** 2)
    if order == 1:
        return -2.0 * beta * xi * G
    if order == 2:
        return (4.0 * beta ** 2 * xi ** 2 - 2.0 * beta) * G
    raise ValueError("order must be 0, 1 or 2")


def _numeric_G(family: WindowFamily, mu: float, xi) -> np.ndarray:
    """Direct quadrature of the chirp-modulated Fourier integral."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty(xi_arr.shape, dtype=complex)
    half_mu = 0.5 * mu  # exp(i*pi*phi''*sigma^2*u^2) with mu = 2*pi*phi''*sigma^2
    for i, x in enumerate(xi_arr.ravel()):
        def integrand_re(u):
            return np.real(family.g(u) * np.exp(1j * half_mu * u ** 2 - 2j * np.pi * x * u))

        def integrand_im(u):
            return np.imag(family.g(u) * np.exp(1j * half_mu * u ** 2 - 2j * np.pi * x * u))

        re, _ = integrate.quad(integrand_re, -QUAD_LIMIT, QUAD_LIMIT, epsabs=1e-12, limit=800)
        im, _ = integrate.quad(integrand_im, -QUAD_LIMIT, QUAD_LIMIT, epsabs=1e-12, limit=800)
        out.ravel()[i] = re + 1j * im
    return out.reshape(np.shape(xi))


def gaussian_alpha_k(mu: float, tau0: float) -> float:
    """Closed-form |G(alpha_k)| = tau0 for the Gaussian window.

    Requires tau0 * (1 + mu^2)^(1/4) <= 1, i.e. the peak |G(0)| must not
    already sit below the threshold.
    """
    s = 1.0 + mu ** 2
    if tau0 * s ** 0.25 > 1.0:
        raise SupportUndefinedError(
            f"tau0*(1+mu^2)^(1/4) = {tau0 * s ** 0.25:.6g} > 1: peak below threshold")
    return math.sqrt(s) * math.sqrt(2.0 * math.log(1.0 / tau0) - 0.5 * math.log(s)) / (2.0 * math.pi)


def chirped_transform(family: WindowFamily, sigma: float, phi2: float,
                      tau0: float) -> ChirpedWindowTransform:
    """Build the chirp-modulated transform G and solve for its support."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not (0.0 < tau0 < 1.0):
        raise ValueError("tau0 must lie strictly between 0 and 1")
    mu = 2.0 * np.pi * phi2 * sigma ** 2

    if family.is_gaussian:
        alpha_k = gaussian_alpha_k(mu, tau0)
        return ChirpedWindowTransform(family=family, sigma=float(sigma),
                                      phi2=float(phi2), tau0=float(tau0),
                                      mu=float(mu), alpha_k=alpha_k)

    def mag(x):
        return abs(complex(_numeric_G(family, mu, np.asarray([x]))[0]))

    peak = mag(0.0)
    if peak <= tau0:
        raise SupportUndefinedError("peak |G(0)| below tau0 for this window")
    # the zone machinery assumes |G| even and decreasing; sample to confirm
    probe = np.linspace(0.0, 8.0, 81)
    mags = np.array([mag(x) for x in probe])
    monotone = bool(np.all(np.diff(mags) <= 1e-9 * peak))
    # largest root: scan from the right so non-monotone windows report the
    # outermost crossing
    hi = 8.0
    while mag(hi) > tau0:
        hi *= 2.0
        if hi > 1e4:
            raise SupportUndefinedError("|G| does not fall below tau0")
    lo = 0.0
    if not monotone:
        above = np.nonzero(mags > tau0)[0]
        lo = probe[above[-1]] if above.size else 0.0
    alpha_k = _bisect_decreasing(mag, tau0, lo, hi, 1e-12)
    return ChirpedWindowTransform(family=family, sigma=float(sigma), phi2=float(phi2),
                                  tau0=float(tau0), mu=float(mu),
                                  alpha_k=alpha_k, monotone=monotone)


def g_jk(transform: ChirpedWindowTransform, j: int, xi):
    """G_{j} values from the derivative relation G_j = G^(j) / (-i*2*pi)^j."""
    if j not in (0, 1, 2):
        raise ValueError("j must be 0, 1 or 2")
    deriv = transform.evaluate(xi, order=j)
    return deriv / (-2j * np.pi) ** j
