"""The Clauser-Horne sum and its local-realistic bound.

The sum combines six coincidence measurements,

    CH = N(t1, t2) - N(t1, t2') + N(t1', t2) + N(t1', t2')
         - N(t1', inf) - N(inf, t2),

where `inf` means the polarizer on that channel is removed.  Every local
realistic model keeps CH <= 0; suitable entangled states push it above zero.

Three evaluation forms are provided:

* probability form: per emitted pair, ideal detection (`ch_probability_sum`);
* count form: measured counts with a Poisson uncertainty (`ch_from_counts`);
* efficiency form: per-arm detector efficiencies eta1, eta2, with the
  coincidence terms scaling as eta1*eta2 and the two removed-polarizer terms
  as true one-arm singles scaling as eta1 and eta2 (`ch_with_efficiency`).

The bound itself is certified by brute force: deterministic local strategies
are the vertices of the local-model polytope, and a linear functional attains
its maximum at a vertex, so enumerating them (16 pass/fail vertices, or 81
vertices once non-detection is an allowed outcome) proves max CH = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from itertools import product
from typing import Literal

from .errors import DomainError
from .model import (
    EntangledState,
    SettingsQuad,
    coincidence_probability,
    single_probability,
)


@dataclass(frozen=True)
class CountsTable:
    """The six measured coincidence counts of one CH run (fixed window)."""

    n_ab: int
    n_ab_prime: int
    n_a_prime_b: int
    n_a_prime_b_prime: int
    n_a_prime_inf: int
    n_inf_b: int

    def __post_init__(self) -> None:
        for name, value in zip(self._FIELDS, self.as_tuple()):
            if int(value) != value or value < 0:
                raise DomainError(f"count {name} must be a nonnegative integer, got {value!r}")

    _FIELDS = (
        "n_ab",
        "n_ab_prime",
        "n_a_prime_b",
        "n_a_prime_b_prime",
        "n_a_prime_inf",
        "n_inf_b",
    )

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (
            self.n_ab,
            self.n_ab_prime,
            self.n_a_prime_b,
            self.n_a_prime_b_prime,
            self.n_a_prime_inf,
            self.n_inf_b,
        )

    def total(self) -> int:
        return sum(self.as_tuple())


# Signs of the six counts in the CH sum, in CountsTable field order.
COUNT_SIGNS = (1, -1, 1, 1, -1, -1)


@dataclass(frozen=True)
class CHResult:
    """A CH value with its propagated uncertainty and significance."""

    value: float
    sigma: float
    z: float

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        expected = 0.0 if self.sigma == 0.0 else self.value / self.sigma
        if abs(self.z - expected) > 1e-12 * max(1.0, abs(expected)):
            raise DomainError(f"z={self.z} inconsistent with value/sigma={expected}")


def ch_probability_sum(state: EntangledState, quad: SettingsQuad) -> float:
    """Per-pair CH sum with ideal detectors.

    Bounded by [-2, 0.5] for any probability assignment; <= 0 whenever the
    state admits a local model (f = 0 or v = 0).
    """
    t1, t1p, t2, t2p = quad.as_tuple()
    return (
        coincidence_probability(state, t1, t2)
        - coincidence_probability(state, t1, t2p)
        + coincidence_probability(state, t1p, t2)
        + coincidence_probability(state, t1p, t2p)
        - single_probability(state, t1p, side=1)
        - single_probability(state, t2, side=2)
    )


def ch_from_counts(counts: CountsTable) -> CHResult:
    """CH value from measured counts, with independent-Poisson error bars.

    sigma = sqrt(sum of all six counts); z = value / sigma (0 for an empty
    table).  Linear in the counts: scaling them by k scales value by k and
    sigma by sqrt(k).
    """
    raw = counts.as_tuple()
    value = float(sum(s * n for s, n in zip(COUNT_SIGNS, raw)))
    total = counts.total()
    sigma = math.sqrt(total)
    z = 0.0 if sigma == 0.0 else value / sigma
    return CHResult(value=value, sigma=sigma, z=z)


def ch_with_efficiency(
    state: EntangledState,
    quad: SettingsQuad,
    eta1: float,
    eta2: float,
) -> float:
    """CH sum with per-arm detector efficiencies.

    The four coincidence terms are attenuated by eta1*eta2; the two
    removed-polarizer terms are true one-arm singles and scale as eta1 and
    eta2 respectively.  At eta1 = eta2 = 1 this reduces to
    ch_probability_sum.
    """
    for name, eta in (("eta1", eta1), ("eta2", eta2)):
        if not (isinstance(eta, (int, float)) and math.isfinite(eta) and 0.0 <= eta <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {eta!r}")
    t1, t1p, t2, t2p = quad.as_tuple()
    coincidences = (
        coincidence_probability(state, t1, t2)
        - coincidence_probability(state, t1, t2p)
        + coincidence_probability(state, t1p, t2)
        + coincidence_probability(state, t1p, t2p)
    )
    singles = eta1 * single_probability(state, t1p, side=1) + eta2 * single_probability(
        state, t2, side=2
    )
    return eta1 * eta2 * coincidences - singles


class Outcome(IntEnum):
    """Deterministic per-setting outcome of a local strategy with detection."""

    UNDETECTED = 0
    DETECTED_FAIL = 1
    DETECTED_PASS = 2


@dataclass(frozen=True)
class LHVStrategy:
    """One deterministic local strategy: an outcome per side per setting.

    Coincidence form uses pass flags in {0, 1} (a removed polarizer always
    passes); efficiency form uses `Outcome` labels, so non-detection is a
    strategy choice.  Field order is (t1, t1', t2, t2').
    """

    a: int
    a_prime: int
    b: int
    b_prime: int

    def encoding(self) -> tuple[int, int, int, int]:
        return (int(self.a), int(self.a_prime), int(self.b), int(self.b_prime))


@dataclass(frozen=True)
class LHVMaximum:
    """Certified maximum of the CH functional over deterministic strategies."""

    max_value: float
    argmax: LHVStrategy


def _coincidence_vertex_value(a: int, ap: int, b: int, bp: int) -> float:
    return float(a * b - a * bp + ap * b + ap * bp - ap - b)


def lhv_maximum(
    form: Literal["coincidence", "efficiency"],
    eta1: float = 1.0,
    eta2: float = 1.0,
) -> LHVMaximum:
    """Maximize the CH functional over all deterministic local strategies.

    Mixtures of strategies cannot beat the best vertex (the functional is
    linear), so this maximum is the local-realistic bound; it is exactly 0 in
    both forms for every pair of efficiencies.  Ties resolve to the
    lexicographically smallest strategy encoding, independent of evaluation
    order.
    """
    if form not in ("coincidence", "efficiency"):
        raise DomainError(f"unknown LHV form {form!r}")
    for name, eta in (("eta1", eta1), ("eta2", eta2)):
        if not (math.isfinite(eta) and 0.0 <= eta <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {eta!r}")

    best_value = -math.inf
    best_key: tuple[int, int, int, int] | None = None
    if form == "coincidence":
        for key in product((0, 1), repeat=4):
            value = _coincidence_vertex_value(*key)
            if value > best_value or (value == best_value and key < best_key):
                best_value, best_key = value, key
        argmax = LHVStrategy(*best_key)
    else:
        for key in product(Outcome, repeat=4):
            a, ap, b, bp = key
            pass_a = a is Outcome.DETECTED_PASS
            pass_ap = ap is Outcome.DETECTED_PASS
            pass_b = b is Outcome.DETECTED_PASS
            pass_bp = bp is Outcome.DETECTED_PASS
            coincidences = (
                (pass_a and pass_b)
                - (pass_a and pass_bp)
                + (pass_ap and pass_b)
                + (pass_ap and pass_bp)
            )
            value = eta1 * eta2 * coincidences - eta1 * pass_ap - eta2 * pass_b
            enc = tuple(int(o) for o in key)
            if value > best_value or (value == best_value and enc < best_key):
                best_value, best_key = value, enc
        argmax = LHVStrategy(*(Outcome(i) for i in best_key))
    return LHVMaximum(max_value=best_value, argmax=argmax)


def all_coincidence_strategies() -> tuple[LHVStrategy, ...]:
    """The 16 pass/fail vertices of the coincidence-form local polytope."""
    return tuple(LHVStrategy(*key) for key in product((0, 1), repeat=4))


def strategy_passes(strategy: LHVStrategy, arm: int, setting_index: int, is_open: bool) -> bool:
    """Whether a strategy's photon passes the analyzer on one arm.

    setting_index 0 is the unprimed angle, 1 the primed one; an open channel
    (polarizer removed) always passes.  Only coincidence-form strategies (pass
    flags in {0, 1}) are meaningful here.
    """
    if is_open:
        return True
    if arm == 1:
        flag = strategy.a if setting_index == 0 else strategy.a_prime
    elif arm == 2:
        flag = strategy.b if setting_index == 0 else strategy.b_prime
    else:
        raise DomainError(f"arm must be 1 or 2, got {arm!r}")
    if flag not in (0, 1):
        raise DomainError(
            "only coincidence-form strategies (pass flags 0/1) can drive a simulation"
        )
    return bool(flag)
