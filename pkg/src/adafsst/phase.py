"""Phase transformations: frequency-reassignment fields on a bundle.

Every field here is an algebraic function of the window-variant matrices
in an :class:`~adafsst.stft.STFTBundle`; no finite differences enter, so
the fields are deterministic functions of the bundle.  The key internal
quantities, all derived from the exact identities

    d/deta V[w]   = -i*2*pi*sigma * V[tau*w]
    d/dt   V      = (i*2*pi*eta - s)V - s*V[g3] - (1/sigma)V[g'],  s = sigma'/sigma

are (writing V1 = V[g1] etc.):

    d/deta(V1/V)        = -i*2*pi*sigma (V*V2 - V1^2) / V^2
    d/dt(d/deta ln V)   = i*2*pi (V^2 + V*V3 - V1*Vp) / V^2
    d/dt(d/dt ln V)     = (Vpp*V - Vp^2) / (sigma*V)^2      (constant sigma)

The first is the chirp-rate discriminator, the second doubles as the
numerator of the local chirp-rate estimate P0 (mixed partials of ln V
commute), and the third feeds the constant-sigma second-order transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import TFGrid
from .stft import STFTBundle

__all__ = [
    "PhaseField",
    "PZeroField",
    "default_gamma",
    "default_gamma2",
    "omega_first",
    "omega_adaptive",
    "omega_second",
    "p_zero",
    "omega_adaptive_second",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseField:
    """A reassignment frequency field with its validity masks.

    ``omega`` is NaN outside ``valid`` (= above the magnitude threshold
    gamma).  For the two-threshold second-order fields, ``branch2`` marks
    where the chirp-rate correction was applied; it is also the
    integration domain the squeezing step must use for that field.
    """

    grid: TFGrid
    omega: np.ndarray
    valid: np.ndarray
    kind: str
    gamma: float
    gamma2: float | None = None
    branch2: np.ndarray | None = None

    def __post_init__(self):
        for name in ("omega", "valid"):
            m = getattr(self, name)
            if m.shape != self.grid.shape:
                raise ValueError(f"{name} shape mismatch with grid")
            m.flags.writeable = False
        if self.branch2 is not None:
            self.branch2.flags.writeable = False

    @property
    def squeeze_domain(self) -> np.ndarray:
        """Cells whose mass a squeeze of this field should move."""
        if self.kind == "adaptive_second" and self.branch2 is not None:
            return self.branch2
        return self.valid


@dataclass(frozen=True)
class PZeroField:
    """Local chirp-rate estimate P0 with its two-threshold mask.

    ``p0`` approximates i*2*pi*sigma(t)*phi''(t) on cells dominated by a
    single chirp component.  ``denom`` is d/deta(V_g1/V); ``valid`` is
    {|V| > gamma1 and |denom| > gamma2} and its complement within
    {|V| > gamma1} is the excluded set whose measure enters the recovery
    bounds.
    """

    grid: TFGrid
    p0: np.ndarray
    denom: np.ndarray
    valid: np.ndarray
    gamma1: float
    gamma2: float

    def __post_init__(self):
        for name in ("p0", "denom", "valid"):
            getattr(self, name).flags.writeable = False


def default_gamma(bundle: STFTBundle, fraction: float = 1e-3) -> float:
    """Relative magnitude threshold: fraction of the peak |V|."""
    return float(fraction * np.max(np.abs(bundle.V)))


def _eta_ratio_derivative(bundle: STFTBundle) -> np.ndarray:
    """d/deta (V_g1 / V), computed where V is nonzero (NaN elsewhere)."""
    V = bundle.V
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (-2j * np.pi * bundle.sigma_t[:, None]
               * (V * bundle.V_g2 - bundle.V_g1 ** 2) / (V * V))
    return out


def default_gamma2(bundle: STFTBundle, gamma1: float, fraction: float = 1e-4) -> float:
    """Threshold on |d/deta(V_g1/V)|: fraction of its median over {|V|>gamma1}."""
    mask = np.abs(bundle.V) > gamma1
    if not np.any(mask):
        return 0.0
    vals = np.abs(_eta_ratio_derivative(bundle)[mask])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return 0.0
    return float(fraction * np.median(vals))


def _masked_real_ratio(num: np.ndarray, den: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.nan)
    np.divide(num.real * den.real + num.imag * den.imag,
              den.real ** 2 + den.imag ** 2, out=out, where=mask)
    return out


def omega_first(bundle: STFTBundle, gamma: float | None = None) -> PhaseField:
    """First-order field Re(dV/dt / (i*2*pi*V)) above the threshold.

    Matches the instantaneous frequency of pure tones exactly when sigma
    is constant; with time-varying sigma it is only a diagnostic (use
    :func:`omega_adaptive` there).
    """
    if gamma is None:
        gamma = default_gamma(bundle)
    valid = np.abs(bundle.V) > gamma
    omega = _masked_real_ratio(bundle.dV_dt, 2j * np.pi * bundle.V, valid)
    return PhaseField(grid=bundle.grid, omega=omega, valid=valid,
                      kind="first", gamma=gamma)


def omega_adaptive(bundle: STFTBundle, gamma: float | None = None) -> PhaseField:
    """Adaptive first-order field; exact on tones for any smooth sigma(t).

    Adds the window-width correction (sigma'/sigma) * Re(V_g3/(i*2*pi*V))
    to the first-order field.  The purely imaginary sigma'/(i*2*pi*sigma)
    term of the complex transform has no real part and is dropped.
    """
    if gamma is None:
        gamma = default_gamma(bundle)
    valid = np.abs(bundle.V) > gamma
    base = _masked_real_ratio(bundle.dV_dt, 2j * np.pi * bundle.V, valid)
    corr = _masked_real_ratio(bundle.V_g3, 2j * np.pi * bundle.V, valid)
    ratio = bundle.dsigma_t / bundle.sigma_t
    return PhaseField(grid=bundle.grid, omega=base + ratio[:, None] * corr,
                      valid=valid, kind="adaptive_first", gamma=gamma)


def _dt_deta_logV(bundle: STFTBundle) -> np.ndarray:
    """d/dt d/deta ln V from the window-variant identities (NaN where V=0)."""
    V = bundle.V
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2j * np.pi * (V * V + V * bundle.V_g3 - bundle.V_g1 * bundle.V_gp) / (V * V)


def omega_second(bundle: STFTBundle, gamma: float | None = None,
                 gamma2_prime: float = 1e-6 * TWO_PI) -> PhaseField:
    """Second-order field for a constant window width; exact on linear chirps.

    The chirp-rate estimate q = d/dt(dV/dt / V) / (i*2*pi - d/dt(dV/deta / V))
    corrects the first-order field by Re(q * dV/deta / (i*2*pi*V)); the
    correction is applied only where the denominator stays away from zero
    (|d/dt(dV/deta/V) - i*2*pi| > gamma2_prime).
    """
    if not bundle.sigma.is_constant(bundle.grid.times):
        raise ValueError("omega_second requires a constant sigma; "
                         "use omega_adaptive_second for time-varying widths")
    if gamma is None:
        gamma = default_gamma(bundle)
    V = bundle.V
    valid = np.abs(V) > gamma
    base = _masked_real_ratio(bundle.dV_dt, 2j * np.pi * V, valid)

    sig = bundle.sigma_t[:, None]
    dt_deta = _dt_deta_logV(bundle)
    with np.errstate(divide="ignore", invalid="ignore"):
        dt_dt = (bundle.V_gpp * V - bundle.V_gp ** 2) / (sig * V) ** 2
        q_den = 2j * np.pi - dt_deta
        branch2 = valid & (np.abs(q_den) > gamma2_prime)
        q = np.where(branch2, dt_dt / np.where(branch2, q_den, 1.0), 0.0)
        # dV/deta / (i*2*pi*V) = -sigma * V_g1 / V
        corr = np.where(branch2, np.real(q * (-sig) * bundle.V_g1 / np.where(valid, V, 1.0)), 0.0)

    omega = np.where(valid, base + corr, np.nan)
    return PhaseField(grid=bundle.grid, omega=omega, valid=valid, kind="second",
                      gamma=gamma, gamma2=gamma2_prime, branch2=branch2)


def p_zero(bundle: STFTBundle, gamma1: float | None = None,
           gamma2: float | None = None) -> PZeroField:
    """Local chirp-rate estimate P0 = i*2*pi*sigma*phi'' + residual.

    P0 is the ratio of d/dt d/deta ln V to d/deta (V_g1/V); the
    (sigma'/sigma)-dependent terms of its defining expression cancel
    exactly once dV/dt is expanded through the derivative identity, so
    the implementation is free of sigma' and of extra window variants.
    Cells failing either threshold are masked.
    """
    if gamma1 is None:
        gamma1 = default_gamma(bundle)
    if gamma2 is None:
        gamma2 = default_gamma2(bundle, gamma1)
    num = _dt_deta_logV(bundle)
    den = _eta_ratio_derivative(bundle)
    with np.errstate(invalid="ignore"):
        valid = (np.abs(bundle.V) > gamma1) & (np.abs(den) > gamma2) & np.isfinite(den.real)
    p0 = np.full(num.shape, np.nan, dtype=complex)
    np.divide(num, den, out=p0, where=valid)
    return PZeroField(grid=bundle.grid, p0=p0, denom=den, valid=valid,
                      gamma1=float(gamma1), gamma2=float(gamma2))


def omega_adaptive_second(bundle: STFTBundle, gamma1: float | None = None,
                          gamma2: float | None = None) -> PhaseField:
    """Adaptive second-order field; exact on linear chirps for smooth sigma(t).

    Two-branch thresholded definition: on {|V| > gamma1} the adaptive
    first-order field is corrected by -Re(V_g1 * P0 / (i*2*pi*V)) wherever
    the chirp-rate estimate is trustworthy (|d/deta(V_g1/V)| > gamma2);
    elsewhere the first-order value stands.  ``branch2`` records the
    corrected cells, which is also the valid squeezing domain.
    """
    if gamma1 is None:
        gamma1 = default_gamma(bundle)
    pz = p_zero(bundle, gamma1=gamma1, gamma2=gamma2)
    first = omega_adaptive(bundle, gamma=gamma1)
    valid = first.valid
    branch2 = valid & pz.valid
    with np.errstate(invalid="ignore"):
        corr = np.where(
            branch2,
            -np.real(bundle.V_g1 * pz.p0 / (2j * np.pi * np.where(valid, bundle.V, 1.0))),
            0.0,
        )
    omega = np.where(valid, first.omega + corr, np.nan)
    return PhaseField(grid=bundle.grid, omega=omega, valid=valid,
                      kind="adaptive_second", gamma=float(gamma1),
                      gamma2=pz.gamma2, branch2=branch2)
