"""Multicomponent AM-FM signal models with analytic ground truth.

A component is A(t) * exp(i*2*pi*phi(t)) with the phase phi stored in
cycles, so every frequency-like quantity in this package is in Hz
(phi' Hz, phi'' Hz/s, phi''' Hz/s^2) and no stray 2*pi factors appear
when comparing against closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "ComponentProfile",
    "MulticomponentModel",
    "SampledSignal",
    "TFGrid",
    "ClassReport",
    "make_sinusoid",
    "make_linear_chirp",
    "make_modulated_tone",
    "sample",
    "class_check",
]

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def _const(value: float) -> ArrayFunc:
    def f(t):
        return np.full_like(np.asarray(t, dtype=float), value)

    return f


@dataclass(frozen=True)
class ComponentProfile:
    """One AM-FM component with closed-form derivative evaluators.

    All evaluators accept and return numpy arrays.  ``phase`` is in
    cycles; ``if_hz`` is its time derivative (the instantaneous
    frequency), ``chirp_rate`` the second and ``chirp_accel`` the third.
    ``fd_derivatives`` marks profiles whose derivatives were filled in by
    finite differences rather than supplied analytically.
    """

    amplitude: ArrayFunc
    phase: ArrayFunc
    if_hz: ArrayFunc
    chirp_rate: ArrayFunc
    chirp_accel: ArrayFunc
    amp_rate: ArrayFunc
    amp_accel: ArrayFunc
    label: str = ""
    fd_derivatives: bool = False

    def evaluate(self, t) -> np.ndarray:
        """Complex samples A(t) * exp(i*2*pi*phi(t))."""
        t = np.asarray(t, dtype=float)
        return self.amplitude(t) * np.exp(2j * np.pi * self.phase(t))

    def chirp_rate_sup(self, times) -> float:
        """Sampled sup of |phi''| over the given times (the paper-style M'')."""
        return float(np.max(np.abs(self.chirp_rate(np.asarray(times, dtype=float)))))


@dataclass(frozen=True)
class MulticomponentModel:
    """Ordered sum of components plus the regularity budgets eps1..eps3.

    Components must be ordered by increasing instantaneous frequency and
    must keep a positive IF gap on the interval of interest; this is
    checked on demand (``d_prime``, ``class_check``) because the
    evaluators are opaque callables.
    """

    components: tuple[ComponentProfile, ...]
    eps1: float = 0.0
    eps2: float = 0.0
    eps3: float = 0.0

    def __init__(self, components: Sequence[ComponentProfile], eps1=0.0, eps2=0.0, eps3=0.0):
        if eps1 < 0 or eps2 < 0 or eps3 < 0:
            raise ValueError("regularity budgets must be nonnegative")
        object.__setattr__(self, "components", tuple(components))
        object.__setattr__(self, "eps1", float(eps1))
        object.__setattr__(self, "eps2", float(eps2))
        object.__setattr__(self, "eps3", float(eps3))

    @property
    def K(self) -> int:
        return len(self.components)

    def if_matrix(self, times) -> np.ndarray:
        """Instantaneous frequencies, shape (K, len(times))."""
        t = np.asarray(times, dtype=float)
        if self.K == 0:
            return np.zeros((0, t.size))
        return np.vstack([c.if_hz(t) for c in self.components])

    def amp_matrix(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        if self.K == 0:
            return np.zeros((0, t.size))
        return np.vstack([c.amplitude(t) for c in self.components])

    def amp_sum(self, times) -> np.ndarray:
        """Sum over components of A_k(t)."""
        if self.K == 0:
            return np.zeros(np.asarray(times, dtype=float).shape)
        return self.amp_matrix(times).sum(axis=0)

    def d_prime(self, times) -> float:
        """Minimum adjacent IF gap over the sampled times."""
        if self.K < 2:
            return np.inf
        f = self.if_matrix(times)
        return float(np.min(np.diff(f, axis=0)))

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        for c in self.components:
            out = out + c.evaluate(t)
        return out


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled complex time series."""

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.ascontiguousarray(np.asarray(self.samples, dtype=complex))
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples.view(float))):
            raise ValueError("samples must be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    @property
    def is_real(self) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.samples.real), initial=0.0)))
        return float(np.max(np.abs(self.samples.imag), initial=0.0)) <= 1e-12 * scale


def _check_uniform(values: np.ndarray, name: str) -> float:
    if values.size < 2:
        raise ValueError(f"{name} needs at least two points")
    steps = np.diff(values)
    if np.any(steps <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    step = float(values[-1] - values[0]) / (values.size - 1)
    if np.max(np.abs(steps - step)) > 1e-9 * max(abs(step), 1e-30):
        raise ValueError(f"{name} must be uniformly spaced")
    return step


@dataclass(frozen=True)
class TFGrid:
    """Uniform time/frequency evaluation grid for the transforms."""

    times: np.ndarray
    freqs: np.ndarray
    dt: float = field(init=False)
    deta: float = field(init=False)

    def __post_init__(self):
        times = np.ascontiguousarray(np.asarray(self.times, dtype=float))
        freqs = np.ascontiguousarray(np.asarray(self.freqs, dtype=float))
        dt = _check_uniform(times, "times")
        deta = _check_uniform(freqs, "freqs")
        times.flags.writeable = False
        freqs.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "dt", dt)
        object.__setattr__(self, "deta", deta)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.times.size, self.freqs.size)

    @staticmethod
    def regular(t_start: float, t_stop: float, n_times: int,
                f_start: float, f_stop: float, n_freqs: int) -> "TFGrid":
        return TFGrid(np.linspace(t_start, t_stop, n_times),
                      np.linspace(f_start, f_stop, n_freqs))


def make_sinusoid(A: float, c: float, label: str = "") -> ComponentProfile:
    """Pure tone A * exp(i*2*pi*c*t)."""
    if A <= 0:
        raise ValueError("amplitude must be positive")
    if c <= 0:
        raise ValueError("frequency must be positive")

    return ComponentProfile(
        amplitude=_const(A),
        phase=lambda t: c * np.asarray(t, dtype=float),
        if_hz=_const(c),
        chirp_rate=_const(0.0),
        chirp_accel=_const(0.0),
        amp_rate=_const(0.0),
        amp_accel=_const(0.0),
        label=label or f"tone({A},{c})",
    )


def make_linear_chirp(A: float, c: float, r: float,
                      interval: tuple[float, float] | None = None,
                      label: str = "") -> ComponentProfile:
    """Linear chirp with phase c*t + r*t^2/2, so the IF is c + r*t.

    When ``interval`` is given, the IF is required to stay positive on it
    (linear IF, so checking the endpoints suffices).
    """
    if A <= 0:
        raise ValueError("amplitude must be positive")
    if interval is not None:
        lo, hi = interval
        if c + r * lo <= 0 or c + r * hi <= 0:
            raise ValueError("instantaneous frequency must stay positive on the interval")

    return ComponentProfile(
        amplitude=_const(A),
        phase=lambda t: c * np.asarray(t, dtype=float) + 0.5 * r * np.asarray(t, dtype=float) ** 2,
        if_hz=lambda t: c + r * np.asarray(t, dtype=float),
        chirp_rate=_const(r),
        chirp_accel=_const(0.0),
        amp_rate=_const(0.0),
        amp_accel=_const(0.0),
        label=label or f"chirp({A},{c},{r})",
    )


def make_modulated_tone(A: float, c: float,
                        am_depth: float = 0.0, am_freq: float = 0.0, am_phase: float = 0.0,
                        fm_depth: float = 0.0, fm_freq: float = 0.0, fm_phase: float = 0.0,
                        label: str = "") -> ComponentProfile:
    """Tone with small sinusoidal AM and FM.

    A(t)   = A * (1 + am_depth * sin(2*pi*am_freq*t + am_phase))
    phi'(t) = c + fm_depth * sin(2*pi*fm_freq*t + fm_phase)

    Used to build class members with nonzero but controlled |A'|, |phi''|
    and |phi'''| budgets.
    """
    if A <= 0:
        raise ValueError("amplitude must be positive")
    if abs(am_depth) >= 1:
        raise ValueError("am_depth must keep the amplitude positive")
    if abs(fm_depth) >= c:
        raise ValueError("fm_depth must keep the IF positive")
    wa = 2 * np.pi * am_freq
    wf = 2 * np.pi * fm_freq

    def phase(t):
        t = np.asarray(t, dtype=float)
        if fm_freq == 0.0:
            return c * t + fm_depth * np.sin(fm_phase) * t
        return c * t - (fm_depth / wf) * (np.cos(wf * t + fm_phase) - np.cos(fm_phase))

    return ComponentProfile(
        amplitude=lambda t: A * (1 + am_depth * np.sin(wa * np.asarray(t, dtype=float) + am_phase)),
        phase=phase,
        if_hz=lambda t: c + fm_depth * np.sin(wf * np.asarray(t, dtype=float) + fm_phase),
        chirp_rate=lambda t: fm_depth * wf * np.cos(wf * np.asarray(t, dtype=float) + fm_phase),
        chirp_accel=lambda t: -fm_depth * wf ** 2 * np.sin(wf * np.asarray(t, dtype=float) + fm_phase),
        amp_rate=lambda t: A * am_depth * wa * np.cos(wa * np.asarray(t, dtype=float) + am_phase),
        amp_accel=lambda t: -A * am_depth * wa ** 2 * np.sin(wa * np.asarray(t, dtype=float) + am_phase),
        label=label or f"modtone({A},{c})",
    )


def from_callable(x: ArrayFunc, A: ArrayFunc | None = None,
                  fd_step: float = 1e-6, label: str = "custom") -> ComponentProfile:
    """Wrap a user-supplied phase evaluator, derivatives by central differences.

    ``x`` is the phase in cycles.  Finite-difference derivatives are
    flagged so reports can warn that the bound inputs are approximate.
    """
    h = fd_step
    amp = A or _const(1.0)

    def d1(t):
        t = np.asarray(t, dtype=float)
        return (x(t + h) - x(t - h)) / (2 * h)

    def d2(t):
        t = np.asarray(t, dtype=float)
        return (x(t + h) - 2 * x(t) + x(t - h)) / h ** 2

    def d3(t):
        t = np.asarray(t, dtype=float)
        return (x(t + 2 * h) - 2 * x(t + h) + 2 * x(t - h) - x(t - 2 * h)) / (2 * h ** 3)

    def a1(t):
        t = np.asarray(t, dtype=float)
        return (amp(t + h) - amp(t - h)) / (2 * h)

    def a2(t):
        t = np.asarray(t, dtype=float)
        return (amp(t + h) - 2 * amp(t) + amp(t - h)) / h ** 2

    return ComponentProfile(amplitude=amp, phase=x, if_hz=d1, chirp_rate=d2,
                            chirp_accel=d3, amp_rate=a1, amp_accel=a2,
                            label=label, fd_derivatives=True)


def sample(model: MulticomponentModel, grid_or_times) -> SampledSignal:
    """Sum the components pointwise at the grid times."""
    if isinstance(grid_or_times, TFGrid):
        times = grid_or_times.times
    elif isinstance(grid_or_times, SampledSignal):
        times = grid_or_times.times
    else:
        times = np.asarray(grid_or_times, dtype=float)
    step = _check_uniform(times, "times")
    return SampledSignal(model.evaluate(times), sample_rate=1.0 / step, t0=float(times[0]))


@dataclass(frozen=True)
class ClassReport:
    """Result of checking a model against its regularity budgets."""

    which: str
    passed: bool
    d_prime: float
    max_amp_rate: np.ndarray        # per component
    max_phase_der: np.ndarray       # |phi''| (first order) or |phi'''| (second order)
    eps1: float
    eps_phase: float                # eps2 or eps3
    violations: tuple[str, ...]
    fd_derivatives: bool

    def __str__(self):
        lines = [f"class check ({self.which}): {'PASS' if self.passed else 'FAIL'}",
                 f"  d' = {self.d_prime:.6g}"]
        for k, (ar, pr) in enumerate(zip(self.max_amp_rate, self.max_phase_der)):
            lines.append(f"  component {k + 1}: max|A'| = {ar:.6g}  max phase-der = {pr:.6g}")
        lines.extend("  " + v for v in self.violations)
        return "\n".join(lines)


def class_check(model: MulticomponentModel, interval: tuple[float, float],
                which: str = "first_order", n: int = 4096) -> ClassReport:
    """Check the sampled derivative maxima against the eps budgets.

    ``which`` selects the budgets: "first_order" checks |A'| <= eps1 and
    |phi''| <= eps2; "second_order" checks |A'| <= eps1 and
    |phi'''| <= eps3.  The interval is sampled at ``n`` points; sups are
    taken over the samples, and the measured adjacent IF gap d' must be
    positive.  Violations are reported, never raised.
    """
    if which not in ("first_order", "second_order"):
        raise ValueError("which must be 'first_order' or 'second_order'")
    t = np.linspace(interval[0], interval[1], n)
    eps_phase = model.eps2 if which == "first_order" else model.eps3

    max_ar = np.array([np.max(np.abs(c.amp_rate(t))) for c in model.components])
    if which == "first_order":
        max_pd = np.array([np.max(np.abs(c.chirp_rate(t))) for c in model.components])
    else:
        max_pd = np.array([np.max(np.abs(c.chirp_accel(t))) for c in model.components])

    violations = []
    for k, c in enumerate(model.components):
        if np.any(c.amplitude(t) <= 0):
            violations.append(f"component {k + 1}: amplitude not positive everywhere")
        if np.any(c.if_hz(t) <= 0):
            violations.append(f"component {k + 1}: IF not positive everywhere")
        if max_ar[k] > model.eps1:
            violations.append(f"component {k + 1}: max|A'| = {max_ar[k]:.6g} exceeds eps1 = {model.eps1:.6g}")
        if max_pd[k] > eps_phase:
            name = "phi''" if which == "first_order" else "phi'''"
            violations.append(f"component {k + 1}: max|{name}| = {max_pd[k]:.6g} exceeds budget {eps_phase:.6g}")

    dp = model.d_prime(t)
    if model.K >= 2 and dp <= 0:
        violations.append(f"adjacent IF gap d' = {dp:.6g} is not positive")

    fd = any(c.fd_derivatives for c in model.components)
    return ClassReport(which=which, passed=not violations, d_prime=dp,
                       max_amp_rate=max_ar, max_phase_der=max_pd,
                       eps1=model.eps1, eps_phase=eps_phase,
                       violations=tuple(violations), fd_derivatives=fd)
