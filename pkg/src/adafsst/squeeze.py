"""Frequency reassignment (synchrosqueezing) and component recovery.

Mass bookkeeping convention: the squeezed matrix R is a density in the
output frequency xi, so sum(R[t, :]) * dxi equals the masked transform
mass sum(V[t, valid]) * deta per frame (exactly, when nothing lands in
the overflow bucket).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .model import SampledSignal, TFGrid
from .phase import PhaseField
from .stft import STFTBundle, SigmaProfile
from .window import WindowFamily

__all__ = [
    "SqueezeParams",
    "SqueezedTFR",
    "Recovered",
    "squeeze",
    "recover_component",
    "extract_ridges",
]


def _h_triangle(u: np.ndarray) -> np.ndarray:
    return np.maximum(1.0 - np.abs(u), 0.0)


def _h_quartic_bump(u: np.ndarray) -> np.ndarray:
    inside = np.abs(u) <= 1.0
    return np.where(inside, (15.0 / 16.0) * (1.0 - u ** 2) ** 2, 0.0)


_KERNELS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "triangle": _h_triangle,
    "quartic_bump": _h_quartic_bump,
}


@dataclass(frozen=True)
class SqueezeParams:
    """Reassignment parameters.

    ``lam`` is the kernel width in Hz; zero selects the limit form, where
    each cell's mass drops into the single output bin containing its
    reassignment frequency.  ``out_bins`` overrides the output axis
    (default: the bundle's frequency axis).  ``gamma``/``gamma2``
    override the phase field's own masks when set.
    """

    lam: float = 0.0
    h_kind: str = "quartic_bump"
    gamma: float | None = None
    gamma2: float | None = None
    out_bins: np.ndarray | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.h_kind not in _KERNELS:
            raise ValueError(f"h_kind must be one of {sorted(_KERNELS)}")


@dataclass(frozen=True)
class SqueezedTFR:
    """Reassigned transform: times x output-frequency bins."""

    times: np.ndarray
    xi: np.ndarray
    R: np.ndarray
    overflow: np.ndarray          # mass (V * deta) that missed the xi axis, per frame
    deta: float
    provenance: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        for name in ("times", "xi", "R", "overflow"):
            getattr(self, name).flags.writeable = False

    @property
    def dxi(self) -> float:
        return float(self.xi[1] - self.xi[0])

    def total_mass(self, include_overflow: bool = True) -> np.ndarray:
        """Per-frame integral of R over xi (plus overflow mass)."""
        total = self.R.sum(axis=1) * self.dxi
        if include_overflow:
            total = total + self.overflow
        return total


def squeeze(bundle: STFTBundle, phase: PhaseField, params: SqueezeParams | None = None) -> SqueezedTFR:
    """Move each masked transform cell's mass to its reassignment frequency.

    With lam == 0 the deposit is pure binning: bins are centered on the
    xi axis values and a value exactly on a bin edge goes to the lower
    bin.  Reassignment frequencies beyond the axis accumulate in a
    per-frame overflow bucket instead of being silently dropped.
    """
    if params is None:
        params = SqueezeParams()
    if phase.grid is not bundle.grid and (phase.grid.shape != bundle.grid.shape
                                          or not np.array_equal(phase.grid.times, bundle.grid.times)
                                          or not np.array_equal(phase.grid.freqs, bundle.grid.freqs)):
        raise ValueError("phase field and bundle must share one grid")

    xi = bundle.grid.freqs if params.out_bins is None else np.asarray(params.out_bins, dtype=float)
    if xi.size < 2:
        raise ValueError("output axis needs at least two bins")
    dxi = float(xi[1] - xi[0])
    deta = bundle.grid.deta
    n_t = bundle.grid.times.size

    domain = phase.squeeze_domain
    if params.gamma is not None:
        domain = np.abs(bundle.V) > params.gamma
        if phase.kind == "adaptive_second" and phase.branch2 is not None:
            domain = domain & phase.branch2
    domain = domain & np.isfinite(phase.omega)

    R = np.zeros((n_t, xi.size), dtype=complex)
    overflow = np.zeros(n_t, dtype=complex)

    ti, fi = np.nonzero(domain)
    if ti.size:
        mass = bundle.V[ti, fi] * deta
        om = phase.omega[ti, fi]
        if params.lam == 0.0:
            # ties on a bin edge go to the lower bin
            pos = (om - xi[0]) / dxi
            k = np.ceil(pos - 0.5).astype(int)
            ok = (k >= 0) & (k < xi.size)
            np.add.at(R, (ti[ok], k[ok]), mass[ok] / dxi)
            np.add.at(overflow, ti[~ok], mass[~ok])
        else:
            h = _KERNELS[params.h_kind]
            lam = params.lam
            for t in np.unique(ti):
                sel = ti == t
                w = h((xi[None, :] - om[sel][:, None]) / lam) / lam
                R[t] = (mass[sel][:, None] * w).sum(axis=0)

    return SqueezedTFR(times=bundle.grid.times.copy(), xi=xi.copy(), R=R,
                       overflow=overflow, deta=deta,
                       provenance={"phase_kind": phase.kind, "lam": params.lam,
                                   "h_kind": params.h_kind,
                                   "gamma": phase.gamma, "gamma2": phase.gamma2})


class Recovered(NamedTuple):
    """Recovered component plus per-frame empty-band flags."""

    signal: SampledSignal
    empty_band: np.ndarray


def recover_component(squeezed: SqueezedTFR, ridge, halfwidth, sigma: SigmaProfile,
                      window: WindowFamily) -> Recovered:
    """Integrate the squeezed transform around a ridge and rescale.

    x_k(t) = sigma(t)/g(0) * sum over |xi - ridge(t)| < halfwidth(t) of
    R(t, xi) * dxi.  ``ridge`` and ``halfwidth`` broadcast over frames.
    Frames with an empty integration band recover zero and are flagged.
    """
    times = squeezed.times
    ridge = np.broadcast_to(np.asarray(ridge, dtype=float), times.shape)
    halfwidth = np.broadcast_to(np.asarray(halfwidth, dtype=float), times.shape)
    if not (np.all(np.isfinite(ridge)) and np.all(np.isfinite(halfwidth))):
        raise ValueError("ridge and halfwidth must be finite")

    inband = np.abs(squeezed.xi[None, :] - ridge[:, None]) < halfwidth[:, None]
    vals = (squeezed.R * inband).sum(axis=1) * squeezed.dxi
    sig_t = np.asarray(sigma.sigma(times), dtype=float)
    out = sig_t / window.g0 * vals
    empty = ~inband.any(axis=1)
    if np.any(empty):
        warnings.warn(f"{int(empty.sum())} frame(s) had an empty integration band",
                      stacklevel=2)
    dt = float(times[1] - times[0])
    return Recovered(SampledSignal(out, sample_rate=1.0 / dt, t0=float(times[0])),
                     empty)


def extract_ridges(squeezed: SqueezedTFR, count: int, smoothness_penalty: float = 2.0,
                   blank_bins: int | None = None, max_jump_bins: int = 12) -> np.ndarray:
    """Greedy penalized-argmax ridge curves from a squeezed transform.

    Each ridge maximizes sum_t log-energy minus penalty * (bin jump)^2
    over paths whose per-frame jump is at most ``max_jump_bins`` (dynamic
    programming, then a one-pass local argmax refinement).  Extracted
    ridges blank out ``blank_bins`` neighbours before the next pass, and
    the result rows are ordered by mean frequency.  Returns an array of
    shape (found, n_times) of xi values; fewer rows than ``count`` are
    returned (with a warning) when the representation runs out of energy.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    energy = np.abs(squeezed.R.T) ** 2          # (n_xi, n_t)
    n_xi, n_t = energy.shape
    floor = 1e-300
    total = energy.sum()
    ridges: list[np.ndarray] = []

    for _ in range(count):
        if energy.sum() <= 1e-12 * max(total, floor):
            break
        score = np.log(energy + floor)
        acc = score[:, 0].copy()
        back = np.zeros((n_xi, n_t), dtype=np.int32)
        offsets = np.arange(-max_jump_bins, max_jump_bins + 1)
        for t in range(1, n_t):
            best = np.full(n_xi, -np.inf)
            arg = np.zeros(n_xi, dtype=np.int32)
            for d in offsets:
                shifted = np.roll(acc, d)
                if d > 0:
                    shifted[:d] = -np.inf
                elif d < 0:
                    shifted[d:] = -np.inf
                cand = shifted - smoothness_penalty * d * d
                take = cand > best
                best[take] = cand[take]
                arg[take] = d
            acc = best + score[:, t]
            back[:, t] = arg
        idx = np.empty(n_t, dtype=np.int32)
        idx[-1] = int(np.argmax(acc))
        for t in range(n_t - 1, 0, -1):
            idx[t - 1] = idx[t] - back[idx[t], t]
        # local refinement: snap to the strongest immediate neighbour
        for t in range(n_t):
            lo = max(idx[t] - 1, 0)
            hi = min(idx[t] + 2, n_xi)
            idx[t] = lo + int(np.argmax(energy[lo:hi, t]))
        ridges.append(squeezed.xi[idx])
        bw = blank_bins if blank_bins is not None else max(2, n_xi // 64)
        for t in range(n_t):
            lo = max(idx[t] - bw, 0)
            energy[lo:idx[t] + bw + 1, t] = 0.0

    if len(ridges) < count:
        warnings.warn(f"found only {len(ridges)} energetic ridge(s) of {count} requested",
                      stacklevel=2)
    if not ridges:
        return np.zeros((0, n_t))
    order = np.argsort([r.mean() for r in ridges])
    return np.vstack([ridges[i] for i in order])
