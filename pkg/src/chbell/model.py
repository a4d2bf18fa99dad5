"""Quantum predictions for a two-crystal polarization-entangled pair source.

The source emits the two-photon state

    |psi> = (|HH> + f e^{i phi} |VV>) / sqrt(1 + f^2)

optionally degraded by a white-noise admixture: the emitted density matrix is
rho = v |psi><psi| + (1 - v) I/4.  Each arm is analyzed by a linear polarizer
(or no polarizer at all), and this module gives the closed-form pass
probabilities needed by the Clauser-Horne analysis:

    coincidence (both photons pass), singles (one arm passes regardless of the
    other), and the full pass/fail joint distribution of one emitted pair.

Angles are degrees at every public interface and are pi-periodic (a polarizer
axis at theta is the axis at theta + 180).  The two arms share the same
marginal formula for this state family; that convention is documented here
rather than parameterized.

All functions are pure; there is no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalConsistencyError

TWO_PI = 2.0 * math.pi


def _require_finite(name: str, value: float) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name} must be a real number, got {value!r}") from exc
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class EntangledState:
    """Source state: amplitude ratio f, relative phase phi (radians), purity v.

    f = 1, v = 1 is the maximally entangled noiseless case; v < 1 mixes in
    unpolarized white noise with weight (1 - v), which makes the fringe
    visibility at a 45-degree analyzer equal v exactly.
    """

    f: float
    phi: float = 0.0
    v: float = 1.0

    def __post_init__(self) -> None:
        f = _require_finite("f", self.f)
        phi = _require_finite("phi", self.phi)
        v = _require_finite("v", self.v)
        if f < 0.0:
            raise DomainError(f"amplitude ratio f must be >= 0, got {f}")
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"purity v must lie in [0, 1], got {v}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "phi", phi % TWO_PI)
        object.__setattr__(self, "v", v)


def make_state(f: float, phi: float = 0.0, v: float = 1.0) -> EntangledState:
    """Build a validated, canonicalized source state."""
    return EntangledState(f=f, phi=phi, v=v)


@dataclass(frozen=True)
class AnalyzerSetting:
    """A polarizer at a fixed angle, or no polarizer at all.

    theta is the axis angle in degrees, canonicalized to [0, 180); None means
    the polarizer is removed and every photon reaches the detector.
    """

    theta: float | None

    def __post_init__(self) -> None:
        if self.theta is None:
            return
        theta = _require_finite("theta", self.theta)
        object.__setattr__(self, "theta", theta % 180.0)

    @property
    def is_open(self) -> bool:
        return self.theta is None

    @classmethod
    def angle(cls, theta_degrees: float) -> "AnalyzerSetting":
        return cls(theta=theta_degrees)

    def __str__(self) -> str:
        return "inf" if self.theta is None else f"{self.theta:g}"


NO_POLARIZER = AnalyzerSetting(theta=None)


def as_setting(setting: "AnalyzerSetting | float | None") -> AnalyzerSetting:
    """Coerce a raw angle (degrees) or None into an AnalyzerSetting."""
    if isinstance(setting, AnalyzerSetting):
        return setting
    if setting is None:
        return NO_POLARIZER
    return AnalyzerSetting(theta=setting)


@dataclass(frozen=True)
class SettingsQuad:
    """The four analyzer angles (degrees) of one Clauser-Horne run."""

    theta1: float
    theta1_prime: float
    theta2: float
    theta2_prime: float

    def __post_init__(self) -> None:
        for name in ("theta1", "theta1_prime", "theta2", "theta2_prime"):
            value = _require_finite(name, getattr(self, name))
            object.__setattr__(self, name, value % 180.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.theta1, self.theta1_prime, self.theta2, self.theta2_prime)


@dataclass(frozen=True)
class JointOutcome:
    """Pass/fail distribution of one emitted pair at two polarizers.

    Indices are (arm 1, arm 2); 1 = passed the polarizer, 0 = absorbed.
    Components are nonnegative and sum to 1 before any detector efficiency.
    """

    p11: float
    p10: float
    p01: float
    p00: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p11, self.p10, self.p01, self.p00)


# --------------------------------------------------------------------------
# Closed-form kernels.  These accept numpy arrays (radians) so the optimizer
# can evaluate dense angle grids; the public API wraps them for scalars.
# --------------------------------------------------------------------------

def _coincidence_kernel(f: float, phi: float, v: float, t1, t2):
    """P(both pass) for polarizers at t1, t2 (radians); broadcasts over arrays.

    |cos t1 cos t2 + f e^{i phi} sin t1 sin t2|^2 / (1 + f^2), white-noise mixed.
    """
    cc = np.cos(t1) * np.cos(t2)
    ss = np.sin(t1) * np.sin(t2)
    pure = (cc * cc + 2.0 * f * math.cos(phi) * cc * ss + f * f * ss * ss) / (1.0 + f * f)
    return v * pure + (1.0 - v) * 0.25


def _single_kernel(f: float, v: float, t):
    """P(one arm passes) for a polarizer at t (radians); same form on both arms."""
    c = np.cos(t)
    s = np.sin(t)
    pure = (c * c + f * f * s * s) / (1.0 + f * f)
    return v * pure + (1.0 - v) * 0.5


def coincidence_probability(
    state: EntangledState,
    a1: AnalyzerSetting | float | None,
    a2: AnalyzerSetting | float | None,
) -> float:
    """Probability that both photons of a pair reach their detectors.

    With one polarizer removed this reduces to the other arm's single
    probability; with both removed it is 1.  Detector efficiency is not
    included here.
    """
    s1, s2 = as_setting(a1), as_setting(a2)
    if s1.is_open and s2.is_open:
        return 1.0
    if s1.is_open:
        return single_probability(state, s2, side=2)
    if s2.is_open:
        return single_probability(state, s1, side=1)
    p = float(
        _coincidence_kernel(
            state.f, state.phi, state.v, math.radians(s1.theta), math.radians(s2.theta)
        )
    )
    return min(1.0, max(0.0, p))


def single_probability(
    state: EntangledState, a: AnalyzerSetting | float | None, side: int
) -> float:
    """Probability that the photon on one arm passes its polarizer.

    Both arms share the marginal (cos^2 t + f^2 sin^2 t)/(1 + f^2) for this
    state family, so `side` only selects which arm the setting refers to.
    """
    if side not in (1, 2):
        raise DomainError(f"side must be 1 or 2, got {side!r}")
    s = as_setting(a)
    if s.is_open:
        return 1.0
    p = float(_single_kernel(state.f, state.v, math.radians(s.theta)))
    return min(1.0, max(0.0, p))


_CONSISTENCY_TOL = 1e-12


def joint_outcome_distribution(
    state: EntangledState,
    a1: AnalyzerSetting | float,
    a2: AnalyzerSetting | float,
) -> JointOutcome:
    """Full pass/fail joint distribution of a pair at two angled polarizers.

    Requires actual angles on both arms (an open channel has no fail event).
    """
    s1, s2 = as_setting(a1), as_setting(a2)
    if s1.is_open or s2.is_open:
        raise DomainError("joint outcome distribution requires polarizers on both arms")
    p11 = coincidence_probability(state, s1, s2)
    p10 = single_probability(state, s1, side=1) - p11
    p01 = single_probability(state, s2, side=2) - p11
    p00 = 1.0 - p11 - p10 - p01
    components = (p11, p10, p01, p00)
    if min(components) < -_CONSISTENCY_TOL:
        raise InternalConsistencyError(
            f"joint outcome has negative component: {components!r}"
        )
    p11, p10, p01, p00 = (max(0.0, p) for p in components)
    return JointOutcome(p11=p11, p10=p10, p01=p01, p00=p00)
