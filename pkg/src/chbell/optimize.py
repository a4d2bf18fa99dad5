"""Analyzer-angle optimization and critical detection efficiencies.

Both searches share one multi-start scheme: the objective is evaluated on a
coarse 5-degree seed grid over the four analyzer angles (halved by a
reflection symmetry), and the best K seeds are polished with a Nelder-Mead
simplex until the per-step improvement drops below tolerance.

The maximum of the ideal-detection CH sum is degenerate: it is attained along
a continuous family of analyzer frames (and their discrete symmetric copies),
so "the" optimal quad is fixed by a deterministic tie-break.  After the
multi-start pass, a second restricted search pins the first angle to zero
(the smallest value a canonical representative can take); if it ties the best
value, the reported quad is the smallest canonical member of the tie set.
This makes reports reproducible and recovers the textbook angle pattern
(theta1' = theta1 + 45 with the opposite arm at the half-angle optimum).

Symmetries.  Every evaluation form is invariant under

    reflection  R: every angle t -> 180 - t  (mod 180),
    relabeling  M: (t1, t1', t2, t2') -> (t2', t2, t1', t1),

where M uses the state family's equal marginals.  `canonical_quad` reduces a
quad to the lexicographically smallest member of its {1, R, M, RM} orbit.
The ideal-detection (probability form) CH sum additionally satisfies

    G: (t1, t1', t2, t2') -> (t1' + 90, t1, t2' + 90, t2),

because shifting a polarizer by 90 degrees swaps its pass/fail ports; G has
order 4 and extends the orbit to 16 value-equal images.
`quad_orbit_distance_deg` compares quads modulo that full group.

The critical efficiency is the smallest symmetric detector efficiency eta at
which some quad gives a positive efficiency-form CH.  Writing the functional
as eta^2 S_c - eta S_s (S_c = signed coincidence part, S_s = singles part), a
quad helps as soon as eta > S_s / S_c, so the threshold is the minimum of
that ratio over quads with S_c > 0.  It is 2/(1+sqrt(2)) ~ 0.8284 for f = 1
and falls toward 2/3 as f -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError
from .model import EntangledState, SettingsQuad, _coincidence_kernel, _single_kernel

DEFAULT_GRID_STEP_DEG = 5.0
DEFAULT_TOP_K = 16
DEFAULT_VALUE_TOL = 1e-10
DEFAULT_MAX_EVALS = 100_000
_REFINE_STEP_DEG = 2.5  # initial simplex edge, half the seed-grid spacing
_TIE_TOL = 1e-9  # refined values this close count as one optimum


@dataclass(frozen=True)
class OptimizationReport:
    """Outcome of one multi-start angle search.

    best_value is the largest value found (never below any grid seed);
    best_quad is the smallest canonical quad whose value ties it within 1e-9.
    converged is False if any local search hit the evaluation cap.
    """

    best_quad: SettingsQuad
    best_value: float
    starts: int
    converged: bool
    iterations: int


@dataclass(frozen=True)
class EfficiencyCurvePoint:
    """Critical symmetric detector efficiency for one amplitude ratio f."""

    f: float
    eta_crit: float
    quad_at_crit: SettingsQuad


# --------------------------------------------------------------------------
# Symmetries
# --------------------------------------------------------------------------

def _mod180(t: tuple[float, ...]) -> tuple[float, ...]:
    return tuple(x % 180.0 for x in t)


def _reflect(t: tuple[float, ...]) -> tuple[float, ...]:
    return tuple((180.0 - x) % 180.0 for x in t)


def _relabel(t: tuple[float, ...]) -> tuple[float, ...]:
    return (t[3], t[2], t[1], t[0])


def _port_swap(t: tuple[float, ...]) -> tuple[float, ...]:
    return ((t[1] + 90.0) % 180.0, t[0], (t[3] + 90.0) % 180.0, t[2])


def _orbit4(t: tuple[float, ...]) -> list[tuple[float, ...]]:
    return [
        _mod180(t),
        _reflect(t),
        _mod180(_relabel(t)),
        _reflect(_relabel(t)),
    ]


def _orbit16(t: tuple[float, ...]) -> list[tuple[float, ...]]:
    images = []
    cur = _mod180(t)
    for _ in range(4):
        images.extend(_orbit4(cur))
        cur = _port_swap(cur)
    return images


def canonical_quad(quad: SettingsQuad) -> SettingsQuad:
    """Smallest representative of a quad's {1, R, M, RM} orbit.

    This group preserves every evaluation form (probability, efficiency,
    threshold ratio), so the canonical quad always scores the same as the
    original.
    """
    return SettingsQuad(*min(_orbit4(quad.as_tuple())))


def quad_distance_deg(a: SettingsQuad, b: SettingsQuad) -> float:
    """Largest per-angle circular distance (period 180) between two quads."""
    dist = 0.0
    for x, y in zip(a.as_tuple(), b.as_tuple()):
        d = abs(x - y) % 180.0
        dist = max(dist, min(d, 180.0 - d))
    return dist


def quad_orbit_distance_deg(a: SettingsQuad, b: SettingsQuad) -> float:
    """Distance between quads modulo the probability-form symmetry group.

    Minimum of quad_distance_deg over the 16 value-preserving images of `a`
    (valid for the ideal-detection CH sum; the efficiency form only shares
    the 4-element subgroup).
    """
    return min(
        quad_distance_deg(SettingsQuad(*img), b) for img in _orbit16(a.as_tuple())
    )


# --------------------------------------------------------------------------
# Grid evaluation (vectorized) and local refinement
# --------------------------------------------------------------------------

def _grid_axes(step_deg: float) -> tuple[np.ndarray, np.ndarray]:
    """Seed-grid axes in radians; t1 is restricted to [0, 90] by R."""
    if not (math.isfinite(step_deg) and 0.0 < step_deg <= 45.0):
        raise DomainError(f"grid step must lie in (0, 45] degrees, got {step_deg!r}")
    full = np.deg2rad(np.arange(0.0, 180.0, step_deg))
    half = full[full <= math.pi / 2 + 1e-12]
    return half, full


def _coincidence_part_grid(
    state: EntangledState, t1_ax: np.ndarray, full_ax: np.ndarray
) -> np.ndarray:
    """Signed coincidence sum S_c on the (t1, t1', t2, t2') grid."""
    f, phi, v = state.f, state.phi, state.v
    p_t1 = _coincidence_kernel(f, phi, v, t1_ax[:, None], full_ax[None, :])
    p_full = _coincidence_kernel(f, phi, v, full_ax[:, None], full_ax[None, :])
    return (
        p_t1[:, None, :, None]
        - p_t1[:, None, None, :]
        + p_full[None, :, :, None]
        + p_full[None, :, None, :]
    )


@dataclass(frozen=True)
class _Candidate:
    value: float  # objective value, minimization sense
    quad: tuple[float, float, float, float]


def _nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    value_tol: float,
    max_evals: int,
):
    simplex = np.vstack([x0] + [x0 + _REFINE_STEP_DEG * e for e in np.eye(len(x0))])
    return minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "fatol": value_tol,
            "xatol": 1e-8,
            "maxfev": max_evals,
            "maxiter": max_evals,
        },
    )


def _refine_seeds(
    objective: Callable[[np.ndarray], float],
    seeds: Sequence[tuple[float, ...]],
    value_tol: float,
    max_evals: int,
    pin_first: bool,
) -> tuple[list[_Candidate], bool, int]:
    """Polish each seed; optionally keep the first angle pinned at its value."""
    candidates = []
    converged = True
    iterations = 0
    for seed in seeds:
        x0 = np.asarray(seed, dtype=float)
        if pin_first:
            first = x0[0]
            obj = lambda w: objective(np.concatenate(([first], w)))  # noqa: E731
            res = _nelder_mead(obj, x0[1:], value_tol, max_evals)
            quad = (first, *res.x)
        else:
            res = _nelder_mead(objective, x0, value_tol, max_evals)
            quad = tuple(res.x)
        converged &= bool(res.success)
        iterations += int(res.nit)
        candidates.append(_Candidate(value=float(res.fun), quad=quad))
    return candidates, converged, iterations


def _grid_seeds(
    objective_grid: np.ndarray,
    t1_ax: np.ndarray,
    full_ax: np.ndarray,
    top_k: int,
) -> list[tuple[float, float, float, float]]:
    """The top_k grid quads (degrees) by ascending objective, stable order."""
    flat = objective_grid.reshape(-1)
    order = np.argsort(flat, kind="stable")[:top_k]
    shape = objective_grid.shape
    seeds = []
    for idx in order:
        i, j, k, l = np.unravel_index(int(idx), shape)
        seeds.append(
            (
                math.degrees(t1_ax[i]),
                math.degrees(full_ax[j]),
                math.degrees(full_ax[k]),
                math.degrees(full_ax[l]),
            )
        )
    return seeds


def _pinned_seeds(
    objective_grid: np.ndarray, full_ax: np.ndarray, top_k: int
) -> list[tuple[float, float, float, float]]:
    """Top seeds of the t1 = 0 grid slice (the lex-smallest first angle)."""
    flat = objective_grid[0].reshape(-1)
    order = np.argsort(flat, kind="stable")[:top_k]
    shape = objective_grid.shape[1:]
    seeds = []
    for idx in order:
        j, k, l = np.unravel_index(int(idx), shape)
        seeds.append(
            (0.0, math.degrees(full_ax[j]), math.degrees(full_ax[k]), math.degrees(full_ax[l]))
        )
    return seeds


def _select_best(candidates: Sequence[_Candidate]) -> tuple[float, SettingsQuad]:
    """Best value plus the smallest canonical quad tying it within _TIE_TOL."""
    best = min(c.value for c in candidates)
    tied = [c for c in candidates if c.value <= best + _TIE_TOL]
    quad = min(canonical_quad(SettingsQuad(*c.quad)).as_tuple() for c in tied)
    return best, SettingsQuad(*quad)


def _run_search(
    objective_grid: np.ndarray,
    scalar_objective: Callable[[np.ndarray], float],
    t1_ax: np.ndarray,
    full_ax: np.ndarray,
    top_k: int,
    value_tol: float,
    max_evals: int,
) -> tuple[float, SettingsQuad, int, bool, int]:
    seeds = _grid_seeds(objective_grid, t1_ax, full_ax, top_k)
    main, conv_a, it_a = _refine_seeds(scalar_objective, seeds, value_tol, max_evals, False)
    pinned_seeds = _pinned_seeds(objective_grid, full_ax, top_k)
    pinned, conv_b, it_b = _refine_seeds(
        scalar_objective, pinned_seeds, value_tol, max_evals, True
    )
    value, quad = _select_best(main + pinned)
    return value, quad, len(seeds) + len(pinned_seeds), conv_a and conv_b, it_a + it_b


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------

def _scalar_ch_eff(state: EntangledState, eta1: float, eta2: float):
    """Scalar efficiency-form CH of a raw angle 4-vector (degrees)."""
    f, phi, v = state.f, state.phi, state.v

    def value(x: np.ndarray) -> float:
        t1, t1p, t2, t2p = np.deg2rad(x)
        s_c = (
            _coincidence_kernel(f, phi, v, t1, t2)
            - _coincidence_kernel(f, phi, v, t1, t2p)
            + _coincidence_kernel(f, phi, v, t1p, t2)
            + _coincidence_kernel(f, phi, v, t1p, t2p)
        )
        s_s = eta1 * _single_kernel(f, v, t1p) + eta2 * _single_kernel(f, v, t2)
        return float(eta1 * eta2 * s_c - s_s)

    return value


def optimize_angles(
    state: EntangledState,
    eta1: float = 1.0,
    eta2: float = 1.0,
    *,
    grid_step_deg: float = DEFAULT_GRID_STEP_DEG,
    top_k: int = DEFAULT_TOP_K,
    value_tol: float = DEFAULT_VALUE_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> OptimizationReport:
    """Maximize the efficiency-form CH sum over the four analyzer angles.

    Deterministic for fixed inputs: fixed seed order, deterministic local
    searches, and the documented smallest-canonical-quad tie-break.
    """
    for name, eta in (("eta1", eta1), ("eta2", eta2)):
        if not (math.isfinite(eta) and 0.0 < eta <= 1.0):
            raise DomainError(f"{name} must lie in (0, 1], got {eta!r}")
    t1_ax, full_ax = _grid_axes(grid_step_deg)
    s_c = _coincidence_part_grid(state, t1_ax, full_ax)
    s1 = _single_kernel(state.f, state.v, full_ax)
    grid = eta1 * eta2 * s_c - (
        eta1 * s1[None, :, None, None] + eta2 * s1[None, None, :, None]
    )
    objective = _scalar_ch_eff(state, eta1, eta2)
    neg_value, quad, starts, converged, iterations = _run_search(
        -grid, lambda x: -objective(x), t1_ax, full_ax, top_k, value_tol, max_evals
    )
    return OptimizationReport(
        best_quad=quad,
        best_value=-neg_value,
        starts=starts,
        converged=converged,
        iterations=iterations,
    )


_RATIO_PENALTY = 1e6
_SC_FLOOR = 1e-12


def critical_efficiency(
    state: EntangledState,
    *,
    grid_step_deg: float = DEFAULT_GRID_STEP_DEG,
    top_k: int = DEFAULT_TOP_K,
    value_tol: float = DEFAULT_VALUE_TOL,
    max_evals: int = DEFAULT_MAX_EVALS,
) -> EfficiencyCurvePoint:
    """Minimum symmetric efficiency at which the state can violate CH.

    Minimizes S_s / S_c over quads with positive S_c.  At the returned quad
    the efficiency-form CH is exactly zero at eta_crit and positive at any
    larger efficiency.
    """
    if state.f <= 0.0:
        raise DomainError("critical efficiency requires f > 0")
    t1_ax, full_ax = _grid_axes(grid_step_deg)
    s_c = _coincidence_part_grid(state, t1_ax, full_ax)
    s1 = _single_kernel(state.f, state.v, full_ax)
    s_s = s1[None, :, None, None] + s1[None, None, :, None]
    ratio = np.where(s_c > _SC_FLOOR, s_s / np.maximum(s_c, _SC_FLOOR), _RATIO_PENALTY)
    if not np.any(ratio < _RATIO_PENALTY):
        raise DomainError(f"no quad with positive coincidence part for f={state.f}")

    f, phi, v = state.f, state.phi, state.v

    def objective(x: np.ndarray) -> float:
        t1, t1p, t2, t2p = np.deg2rad(x)
        sc = float(
            _coincidence_kernel(f, phi, v, t1, t2)
            - _coincidence_kernel(f, phi, v, t1, t2p)
            + _coincidence_kernel(f, phi, v, t1p, t2)
            + _coincidence_kernel(f, phi, v, t1p, t2p)
        )
        if sc <= _SC_FLOOR:
            return _RATIO_PENALTY
        ss = float(_single_kernel(f, v, t1p) + _single_kernel(f, v, t2))
        return ss / sc

    eta_crit, quad, _starts, _converged, _iters = _run_search(
        ratio, objective, t1_ax, full_ax, top_k, value_tol, max_evals
    )
    if eta_crit >= 1.0 + 1e-9:
        raise DomainError(
            f"state f={state.f}, v={state.v} admits no violation at any efficiency <= 1"
        )
    return EfficiencyCurvePoint(
        f=state.f, eta_crit=min(eta_crit, 1.0), quad_at_crit=quad
    )


def efficiency_curve(
    f_values: Sequence[float],
    *,
    grid_step_deg: float = DEFAULT_GRID_STEP_DEG,
    top_k: int = DEFAULT_TOP_K,
) -> list[EfficiencyCurvePoint]:
    """Critical efficiency for each f (noiseless state), in input order."""
    points = []
    for f in f_values:
        try:
            state = EntangledState(f=f, phi=0.0, v=1.0)
            points.append(
                critical_efficiency(state, grid_step_deg=grid_step_deg, top_k=top_k)
            )
        except DomainError as exc:
            raise DomainError(f"critical efficiency failed at f={f}: {exc}") from exc
    return points
