"""Seeded pair-by-pair simulation of the coincidence-counting experiment.

Each measurement cell (one pair of analyzer settings) draws a Poisson number
of emitted pairs, samples the pass/fail outcome of every pair from the
quantum model (or from a mixture of deterministic local strategies), thins by
the per-arm detector efficiencies, and counts a coincidence when both arms
detect.  Pairing is by construction, so the coincidence window only matters
for dark-count accidentals, which are added as an extra Poisson term with the
standard 2*tau product-rate formula.

Reproducibility: cell i of a run with master seed s draws from
numpy's default_rng seeded with SeedSequence([s, i]) (the visibility scan's
bootstrap uses index n for an n-point grid).  Streams are independent, so
cells could be simulated concurrently and merged in any order without
changing the counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DomainError
from .inequality import CHResult, CountsTable, LHVStrategy, ch_from_counts, strategy_passes
from .model import (
    NO_POLARIZER,
    AnalyzerSetting,
    EntangledState,
    SettingsQuad,
    as_setting,
    coincidence_probability,
    single_probability,
)


@dataclass(frozen=True)
class DetectionModel:
    """Detector and source parameters of one simulated run.

    eta1 and eta2 are total per-arm detection efficiencies (the two arms may
    differ, e.g. for nondegenerate wavelengths); dark rates are detector
    counts per second and contribute accidental coincidences within the
    coincidence window.
    """

    eta1: float = 1.0
    eta2: float = 1.0
    pair_rate: float = 0.0
    duration: float = 1.0
    dark_rate1: float = 0.0
    dark_rate2: float = 0.0
    coincidence_window: float = 1e-8

    def __post_init__(self) -> None:
        for name in ("eta1", "eta2"):
            eta = getattr(self, name)
            if not (isinstance(eta, (int, float)) and math.isfinite(eta) and 0.0 <= eta <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {eta!r}")
        for name in ("pair_rate", "duration", "dark_rate1", "dark_rate2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0.0):
                raise DomainError(f"{name} must be a finite nonnegative number, got {value!r}")
        if not (
            isinstance(self.coincidence_window, (int, float))
            and math.isfinite(self.coincidence_window)
            and self.coincidence_window > 0.0
        ):
            raise DomainError(
                f"coincidence_window must be positive, got {self.coincidence_window!r}"
            )


@dataclass(frozen=True)
class RunRecord:
    """One simulated cell: its settings, coincidence count, and provenance."""

    settings: tuple[AnalyzerSetting, AnalyzerSetting]
    counts: int
    pairs_emitted: int
    seed: int


@dataclass(frozen=True)
class CHExperimentResult:
    """Counts and CH estimate of one simulated six-cell experiment."""

    counts: CountsTable
    result: CHResult
    cells: tuple[RunRecord, ...]


@dataclass(frozen=True)
class LHVMixture:
    """A probability mixture over deterministic local strategies.

    Only coincidence-form strategies (pass flags in {0, 1} per setting) can
    drive a simulation; weights must be nonnegative and sum to 1.
    """

    strategies: tuple[LHVStrategy, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.strategies) == 0:
            raise DomainError("mixture must contain at least one strategy")
        if len(self.strategies) != len(self.weights):
            raise DomainError("mixture strategies and weights differ in length")
        for w in self.weights:
            if not (isinstance(w, (int, float)) and math.isfinite(w) and w >= 0.0):
                raise DomainError(f"mixture weight must be finite and >= 0, got {w!r}")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise DomainError(f"mixture weights must sum to 1, got {sum(self.weights)!r}")
        for strat in self.strategies:
            for flag in strat.encoding():
                if flag not in (0, 1):
                    raise DomainError(
                        "simulation mixtures require coincidence-form strategies (flags 0/1)"
                    )

    @classmethod
    def point(cls, strategy: LHVStrategy) -> "LHVMixture":
        return cls(strategies=(strategy,), weights=(1.0,))

    @classmethod
    def uniform(cls, strategies: Sequence[LHVStrategy]) -> "LHVMixture":
        n = len(strategies)
        if n == 0:
            raise DomainError("mixture must contain at least one strategy")
        return cls(strategies=tuple(strategies), weights=(1.0 / n,) * n)

    def pass_probability(self, arm: int, setting: AnalyzerSetting, setting_index: int) -> float:
        """Mixture-averaged probability that the photon on `arm` passes."""
        return sum(
            w * strategy_passes(s, arm, setting_index, setting.is_open)
            for w, s in zip(self.weights, self.strategies)
        )


def _check_seed(seed: int) -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
        raise DomainError(f"seed must be a nonnegative integer, got {seed!r}")
    return int(seed)


def cell_seed(master_seed: int, index: int) -> int:
    """Derived integer seed of sub-stream `index` under a master seed."""
    ss = np.random.SeedSequence([_check_seed(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _accidental_mean(rate1: float, rate2: float, model: DetectionModel) -> float:
    return 2.0 * model.coincidence_window * rate1 * rate2 * model.duration


def _dark_accidentals(
    rng: np.random.Generator,
    model: DetectionModel,
    pass1: float,
    pass2: float,
) -> int:
    """Accidental coincidences from dark counts (0 when both dark rates are 0).

    Uses total detector singles rates: true singles eta * pair_rate * P(pass)
    plus the dark rate on each arm.
    """
    if model.dark_rate1 <= 0.0 and model.dark_rate2 <= 0.0:
        return 0
    rate1 = model.eta1 * model.pair_rate * pass1 + model.dark_rate1
    rate2 = model.eta2 * model.pair_rate * pass2 + model.dark_rate2
    return int(rng.poisson(_accidental_mean(rate1, rate2, model)))


def simulate_cell(
    state: EntangledState,
    a1: AnalyzerSetting | float | None,
    a2: AnalyzerSetting | float | None,
    model: DetectionModel,
    seed: int,
) -> RunRecord:
    """Simulate one measurement cell of the quantum source.

    Emits Poisson(pair_rate * duration) pairs; each pair passes both analyzers
    with the model's coincidence probability (a removed polarizer always
    passes) and each passed photon is detected with its arm's efficiency.
    Deterministic given (inputs, seed).
    """
    s1, s2 = as_setting(a1), as_setting(a2)
    seed = _check_seed(seed)
    rng = np.random.default_rng(seed)
    pairs = int(rng.poisson(model.pair_rate * model.duration))
    q = coincidence_probability(state, s1, s2) * model.eta1 * model.eta2
    count = int(rng.binomial(pairs, q)) if pairs > 0 else 0
    count += _dark_accidentals(
        rng,
        model,
        single_probability(state, s1, side=1),
        single_probability(state, s2, side=2),
    )
    return RunRecord(settings=(s1, s2), counts=count, pairs_emitted=pairs, seed=seed)


def _lhv_cell(
    mixture: LHVMixture,
    s1: AnalyzerSetting,
    s2: AnalyzerSetting,
    index1: int,
    index2: int,
    model: DetectionModel,
    seed: int,
) -> RunRecord:
    rng = np.random.default_rng(seed)
    pairs = int(rng.poisson(model.pair_rate * model.duration))
    eta12 = model.eta1 * model.eta2
    count = 0
    if pairs > 0:
        weights = np.asarray(mixture.weights, dtype=float)
        weights = weights / weights.sum()
        per_strategy = rng.multinomial(pairs, weights)
        for n_k, strat in zip(per_strategy, mixture.strategies):
            both = strategy_passes(strat, 1, index1, s1.is_open) and strategy_passes(
                strat, 2, index2, s2.is_open
            )
            if n_k > 0 and both:
                count += int(rng.binomial(int(n_k), eta12))
    count += _dark_accidentals(
        rng,
        model,
        mixture.pass_probability(1, s1, index1),
        mixture.pass_probability(2, s2, index2),
    )
    return RunRecord(settings=(s1, s2), counts=count, pairs_emitted=pairs, seed=seed)


def _cell_settings(quad: SettingsQuad) -> list[tuple[AnalyzerSetting, AnalyzerSetting, int, int]]:
    """The six cells of Eq. order: settings plus per-arm setting indices.

    Index 0 is the unprimed angle, 1 the primed one (used by LHV strategies);
    the index of an open channel is irrelevant.
    """
    a = AnalyzerSetting(quad.theta1)
    ap = AnalyzerSetting(quad.theta1_prime)
    b = AnalyzerSetting(quad.theta2)
    bp = AnalyzerSetting(quad.theta2_prime)
    return [
        (a, b, 0, 0),
        (a, bp, 0, 1),
        (ap, b, 1, 0),
        (ap, bp, 1, 1),
        (ap, NO_POLARIZER, 1, 0),
        (NO_POLARIZER, b, 0, 0),
    ]


def simulate_ch_experiment(
    state: EntangledState,
    quad: SettingsQuad,
    model: DetectionModel,
    seed: int,
) -> CHExperimentResult:
    """Simulate the six cells of one CH run and estimate CH with errors.

    Cell i uses the independent sub-stream cell_seed(seed, i), so the run is
    bit-reproducible and cells are statistically independent.
    """
    seed = _check_seed(seed)
    records = [
        simulate_cell(state, s1, s2, model, cell_seed(seed, i))
        for i, (s1, s2, _, _) in enumerate(_cell_settings(quad))
    ]
    counts = CountsTable(*(r.counts for r in records))
    return CHExperimentResult(counts=counts, result=ch_from_counts(counts), cells=tuple(records))


def simulate_lhv_source(
    mixture: LHVMixture,
    quad: SettingsQuad,
    model: DetectionModel,
    seed: int,
) -> CHExperimentResult:
    """Simulate the same six-cell run with a local-hidden-variable source.

    Each pair draws one strategy from the mixture and follows its
    deterministic pass/fail assignments; detection and dark handling match
    simulate_cell.  The expected CH is <= 0 for every mixture.
    """
    seed = _check_seed(seed)
    records = [
        _lhv_cell(mixture, s1, s2, i1, i2, model, cell_seed(seed, i))
        for i, (s1, s2, i1, i2) in enumerate(_cell_settings(quad))
    ]
    counts = CountsTable(*(r.counts for r in records))
    return CHExperimentResult(counts=counts, result=ch_from_counts(counts), cells=tuple(records))


@dataclass(frozen=True)
class VisibilityScanResult:
    """Fringe visibility (and its bootstrap error in simulated mode)."""

    visibility: float
    sigma_visibility: float
    n_max: float
    n_min: float
    theta2_deg: tuple[float, ...]
    values: tuple[float, ...]


_BOOTSTRAP_SAMPLES = 200


def _quadratic_peak(theta: np.ndarray, values: np.ndarray, idx: int, find_max: bool) -> float:
    """Extremum refined by a parabola through the grid point and neighbors.

    The fringe is 180-degree periodic, so neighbors wrap around with the
    angle shifted by one period.  Falls back to the raw grid value when the
    three points do not bend the expected way.
    """
    n = len(theta)
    i0, i2 = (idx - 1) % n, (idx + 1) % n
    x1, y1 = theta[idx], values[idx]
    x0 = theta[i0] - (180.0 if i0 > idx else 0.0)
    x2 = theta[i2] + (180.0 if i2 < idx else 0.0)
    y0, y2 = values[i0], values[i2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    if denom == 0.0:
        return float(y1)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if (find_max and a >= 0.0) or (not find_max and a <= 0.0):
        return float(y1)
    x_star = -b / (2.0 * a)
    if not (x0 <= x_star <= x2):
        return float(y1)
    c = y1 - a * x1 * x1 - b * x1
    return float(a * x_star * x_star + b * x_star + c)


def _fringe_visibility(theta: np.ndarray, values: np.ndarray) -> tuple[float, float, float]:
    n_max = _quadratic_peak(theta, values, int(np.argmax(values)), find_max=True)
    n_min = max(0.0, _quadratic_peak(theta, values, int(np.argmin(values)), find_max=False))
    n_max = max(n_max, float(values.max()))
    total = n_max + n_min
    v = 0.0 if total == 0.0 else (n_max - n_min) / total
    return v, n_max, n_min


def visibility_scan(
    state: EntangledState,
    fixed_theta1: float,
    theta2_grid: Sequence[float],
    mode: Literal["analytic", "simulated"] = "analytic",
    model: DetectionModel | None = None,
    seed: int | None = None,
) -> VisibilityScanResult:
    """Scan one polarizer across a grid with the other fixed; fit visibility.

    The grid must have at least 8 points and span at least a full half-turn
    period, i.e. max - min >= 180 * (n - 1) / n degrees.  Extrema are refined
    by quadratic interpolation around the grid extremes, and
    V = (Nmax - Nmin) / (Nmax + Nmin).  In analytic mode with the fixed
    polarizer at 45 degrees, V equals the state's purity v exactly.
    Simulated mode counts coincidences per grid point (model required) and
    attaches a parametric-bootstrap sigma.
    """
    grid = np.asarray(list(theta2_grid), dtype=float)
    if grid.ndim != 1 or len(grid) < 8:
        raise DomainError(f"theta2 grid needs at least 8 points, got {grid.size}")
    if not np.all(np.isfinite(grid)):
        raise DomainError("theta2 grid must be finite")
    n = len(grid)
    span = float(grid.max() - grid.min())
    if span < 180.0 * (n - 1) / n - 1e-9:
        raise DomainError(
            f"theta2 grid must span at least 180 * (n-1)/n = "
            f"{180.0 * (n - 1) / n:.4g} degrees, got {span:.4g}"
        )
    order = np.argsort(grid, kind="stable")
    theta = np.mod(grid[order], 180.0)
    theta = np.sort(theta)

    if mode == "analytic":
        values = np.array(
            [coincidence_probability(state, fixed_theta1, t) for t in theta], dtype=float
        )
        v, n_max, n_min = _fringe_visibility(theta, values)
        return VisibilityScanResult(
            visibility=v,
            sigma_visibility=0.0,
            n_max=n_max,
            n_min=n_min,
            theta2_deg=tuple(float(t) for t in theta),
            values=tuple(float(y) for y in values),
        )
    if mode != "simulated":
        raise DomainError(f"mode must be 'analytic' or 'simulated', got {mode!r}")
    if model is None:
        raise DomainError("simulated visibility scan requires a detection model")
    if seed is None:
        raise DomainError("simulated visibility scan requires a seed")
    seed = _check_seed(seed)
    records = [
        simulate_cell(state, fixed_theta1, t, model, cell_seed(seed, i))
        for i, t in enumerate(theta)
    ]
    values = np.array([r.counts for r in records], dtype=float)
    v, n_max, n_min = _fringe_visibility(theta, values)
    boot_rng = np.random.default_rng(cell_seed(seed, n))
    resampled = np.empty(_BOOTSTRAP_SAMPLES, dtype=float)
    for k in range(_BOOTSTRAP_SAMPLES):
        fake = boot_rng.poisson(values).astype(float)
        resampled[k] = _fringe_visibility(theta, fake)[0]
    return VisibilityScanResult(
        visibility=v,
        sigma_visibility=float(resampled.std(ddof=1)),
        n_max=n_max,
        n_min=n_min,
        theta2_deg=tuple(float(t) for t in theta),
        values=tuple(float(y) for y in values),
    )
