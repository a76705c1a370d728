"""Time-frequency zones, well-separation checks, and window-width selection.

Zone kinds:
  Z        band of halfwidth alpha/sigma(t) around each IF curve,
  O        halfwidth alpha_k(t)/sigma(t) from the chirped window support,
  O_prime  enlarged halfwidth (alpha/sigma) * (1 + 2*pi*|phi''|*sigma^2).

sigma1 makes adjacent Z zones touch for tone-like components; sigma2 is
the linear-chirp rule that makes adjacent O_prime zones touch, and both
are exposed as differentiable profiles so the adaptive transform can use
them directly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import MulticomponentModel
from .stft import SigmaProfile
from .window import WindowFamily, chirped_transform, effective_support, gaussian_alpha_k

__all__ = [
    "ZoneSet",
    "SeparationError",
    "SeparationReport",
    "sigma1",
    "sigma2",
    "sigma2_window_bracket",
    "zones",
    "check_separation",
    "l_k",
]


class SeparationError(ValueError):
    """Raised when a selection rule is infeasible for the model."""


@dataclass(frozen=True)
class ZoneSet:
    """Per-component frequency bands over time.

    ``centers`` and ``halfwidths`` have shape (K, n_times), in Hz.
    Membership is strict: a point belongs to zone k at time index i when
    |eta - centers[k, i]| < halfwidths[k, i].
    """

    kind: str
    times: np.ndarray
    centers: np.ndarray
    halfwidths: np.ndarray

    def __post_init__(self):
        if self.kind not in ("Z", "O", "O_prime"):
            raise ValueError("kind must be 'Z', 'O' or 'O_prime'")
        if np.any(self.halfwidths <= 0):
            raise ValueError("zone halfwidths must be positive")
        for name in ("times", "centers", "halfwidths"):
            getattr(self, name).flags.writeable = False

    @property
    def K(self) -> int:
        return self.centers.shape[0]

    def membership(self, freqs: np.ndarray) -> np.ndarray:
        """Boolean array (K, n_times, n_freqs) of strict zone membership."""
        d = np.abs(freqs[None, None, :] - self.centers[:, :, None])
        return d < self.halfwidths[:, :, None]


def _gaps(model: MulticomponentModel, t: np.ndarray) -> np.ndarray:
    """Adjacent IF gaps (K-1, n_t); raises if any is nonpositive."""
    f = model.if_matrix(t)
    gaps = np.diff(f, axis=0)
    if np.any(gaps <= 0):
        k = int(np.argwhere(gaps <= 0)[0][0])
        raise SeparationError(
            f"components {k + 1} and {k + 2} have a nonpositive IF gap")
    return gaps


def sigma1(model: MulticomponentModel, alpha: float,
           default_sigma: float = 0.05) -> SigmaProfile:
    """Tone rule: sigma1(t) = max_k 2*alpha / (phi'_k - phi'_{k-1}).

    The derivative comes from differentiating the active branch of the
    max (correct one-sidedly at branch switches).  With a single
    component the machinery does not apply and a constant profile at
    ``default_sigma`` is returned.
    """
    if model.K < 2:
        return SigmaProfile.constant(default_sigma)

    def value(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (2.0 * alpha / _gaps(model, t)).max(axis=0)

    def deriv(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        gaps = _gaps(model, t)
        active = np.argmin(gaps, axis=0)  # smallest gap binds the max
        rates = np.vstack([c.chirp_rate(t) for c in model.components])
        dgap = np.take_along_axis(np.diff(rates, axis=0), active[None, :], 0)[0]
        g = np.take_along_axis(gaps, active[None, :], 0)[0]
        return -2.0 * alpha * dgap / g ** 2

    return SigmaProfile(sigma=value, dsigma=deriv, description=f"sigma1(alpha={alpha:g})")


def _sigma2_terms(model: MulticomponentModel, alpha: float, t: np.ndarray):
    gaps = _gaps(model, t)                                   # b_k, (K-1, n)
    rates = np.vstack([c.chirp_rate(t) for c in model.components])
    a = 2.0 * np.pi * alpha * (np.abs(rates[:-1]) + np.abs(rates[1:]))
    disc = gaps ** 2 - 8.0 * alpha * a
    return gaps, rates, a, disc


def sigma2(model: MulticomponentModel, alpha: float,
           default_sigma: float = 0.05) -> SigmaProfile:
    """Chirp rule: sigma2(t) = max_k 4*alpha / (b_k + sqrt(b_k^2 - 8*alpha*a_k))

    with a_k = 2*pi*alpha*(|phi''_{k-1}| + |phi''_k|) and b_k the IF gap.
    Requires the chirp separability condition b_k^2 >= 8*alpha*a_k at
    every evaluated time; an infeasible time raises with the violating
    pair instead of returning a partial profile.
    """
    if model.K < 2:
        return SigmaProfile.constant(default_sigma)

    def check(disc, t):
        if np.any(disc < 0):
            i, j = np.argwhere(disc < 0)[0]
            raise SeparationError(
                f"chirp separability fails for components {i + 1}/{i + 2} "
                f"at t = {t[j]:.6g}")

    def value(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        gaps, _, _, disc = _sigma2_terms(model, alpha, t)
        check(disc, t)
        return (4.0 * alpha / (gaps + np.sqrt(disc))).max(axis=0)

    def deriv(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        gaps, rates, a, disc = _sigma2_terms(model, alpha, t)
        check(disc, t)
        vals = 4.0 * alpha / (gaps + np.sqrt(disc))
        active = np.argmax(vals, axis=0)
        accel = np.vstack([c.chirp_accel(t) for c in model.components])
        da = 2.0 * np.pi * alpha * (np.sign(rates[:-1]) * accel[:-1]
                                    + np.sign(rates[1:]) * accel[1:])
        db = np.diff(rates, axis=0)
        take = lambda m: np.take_along_axis(m, active[None, :], 0)[0]
        b, sq, ak, dak, dbk = take(gaps), take(np.sqrt(disc)), take(a), take(da), take(db)
        sq = np.maximum(sq, 1e-300)  # one-sided at the zero-discriminant kink
        ddisc = 2.0 * b * dbk - 8.0 * alpha * dak
        return -4.0 * alpha * (dbk + ddisc / (2.0 * sq)) / (b + sq) ** 2

    return SigmaProfile(sigma=value, dsigma=deriv, description=f"sigma2(alpha={alpha:g})")


def sigma2_window_bracket(model: MulticomponentModel, alpha: float, times):
    """The admissible window-width interval [max lower, min upper] per time.

    Any sigma(t) between the two returned curves keeps the enlarged
    chirp zones disjoint; the bracket is empty (lo > hi) where the
    separability condition fails.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    gaps, _, a, disc = _sigma2_terms(model, alpha, t)
    if np.any(disc < 0):
        i, j = np.argwhere(disc < 0)[0]
        raise SeparationError(
            f"chirp separability fails for components {i + 1}/{i + 2} at t = {t[j]:.6g}")
    sq = np.sqrt(disc)
    lo = (4.0 * alpha / (gaps + sq)).max(axis=0)
    with np.errstate(divide="ignore"):
        hi = np.where(a > 0, 4.0 * alpha / np.maximum(gaps - sq, 1e-300), np.inf).min(axis=0)
    return lo, hi


def zones(model: MulticomponentModel, sigma: SigmaProfile, window: WindowFamily,
          tau0: float, kind: str, times) -> ZoneSet:
    """Per-(component, time) zone centers and halfwidths."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    sig = np.asarray(sigma.sigma(t), dtype=float)
    centers = model.if_matrix(t)
    alpha = effective_support(window, tau0)
    if kind == "Z":
        hw = np.broadcast_to(alpha / sig, centers.shape).copy()
    elif kind == "O_prime":
        rates = np.vstack([c.chirp_rate(t) for c in model.components])
        hw = (alpha / sig) * (1.0 + 2.0 * np.pi * np.abs(rates) * sig ** 2)
    elif kind == "O":
        rates = np.vstack([c.chirp_rate(t) for c in model.components])
        if window.is_gaussian:
            mu = 2.0 * np.pi * rates * sig ** 2
            ak = np.vectorize(lambda m: gaussian_alpha_k(m, tau0))(mu)
        else:
            ak = np.empty_like(rates)
            for k in range(rates.shape[0]):
                for i in range(rates.shape[1]):
                    ak[k, i] = chirped_transform(window, sig[i], rates[k, i], tau0).alpha_k
        hw = ak / sig
    else:
        raise ValueError("kind must be 'Z', 'O' or 'O_prime'")
    return ZoneSet(kind=kind, times=t, centers=centers, halfwidths=hw)


@dataclass(frozen=True)
class SeparationReport:
    """Per-time zone gaps and the overall separation verdict."""

    kind: str
    times: np.ndarray
    min_gap: np.ndarray            # smallest inter-zone gap per time, Hz
    passed: bool
    bracket_lo: np.ndarray | None = None
    bracket_hi: np.ndarray | None = None
    bracket_ok: bool | None = None

    def __str__(self):
        lines = [f"separation ({self.kind} zones): {'PASS' if self.passed else 'FAIL'}",
                 f"  min gap over time: {self.min_gap.min():.6g} Hz"]
        if self.bracket_ok is not None:
            lines.append(f"  sigma2 window bracket consistent: {self.bracket_ok}")
        return "\n".join(lines)


def check_separation(zoneset: ZoneSet, model: MulticomponentModel | None = None,
                     alpha: float | None = None, tol: float = 1e-9) -> SeparationReport:
    """Smallest inter-zone gap per time; zones may touch but not overlap.

    When ``model`` and ``alpha`` are supplied, the chirp-rule window
    bracket consistency (max of lower endpoints <= min of upper ones) is
    verified as well.
    """
    if zoneset.K < 2:
        gap = np.full(zoneset.times.shape, np.inf)
        return SeparationReport(kind=zoneset.kind, times=zoneset.times,
                                min_gap=gap, passed=True)
    lo_edge = zoneset.centers + zoneset.halfwidths
    hi_edge = zoneset.centers - zoneset.halfwidths
    gap = (hi_edge[1:] - lo_edge[:-1]).min(axis=0)
    passed = bool(np.all(gap >= -tol))
    blo = bhi = bok = None
    if model is not None and alpha is not None:
        blo, bhi = sigma2_window_bracket(model, alpha, zoneset.times)
        bok = bool(np.all(blo <= bhi * (1 + 1e-12)))
    return SeparationReport(kind=zoneset.kind, times=zoneset.times, min_gap=gap,
                            passed=passed, bracket_lo=blo, bracket_hi=bhi,
                            bracket_ok=bok)


def l_k(zoneset: ZoneSet) -> np.ndarray:
    """Neighbour-limited band radius: L_k = min over neighbours of hw_k + hw_nb.

    Defined for the chirp zones (kind 'O'); boundary components use their
    single neighbour, and a single-component set falls back to twice its
    own halfwidth (flagged, since no neighbour constrains it).
    """
    if zoneset.kind != "O":
        raise ValueError("l_k is defined on chirp zones (kind 'O')")
    hw = zoneset.halfwidths
    K = zoneset.K
    if K == 1:
        warnings.warn("single component: L_1 = 2*alpha_1/sigma by convention",
                      stacklevel=2)
        return 2.0 * hw
    out = np.empty_like(hw)
    for k in range(K):
        cands = []
        if k > 0:
            cands.append(hw[k] + hw[k - 1])
        if k < K - 1:
            cands.append(hw[k] + hw[k + 1])
        out[k] = np.minimum.reduce(cands)
    return out
