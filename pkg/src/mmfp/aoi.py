"""Update-rate control minimizing the average age of information.

``K`` sources push updates at rates ``lambda_k`` into one preemptive
last-come-first-serve server of rate ``mu``. With ``rho_k = lambda_k / mu``
and the accumulated earlier load ``rhat_k = sum_{i<k} rho_i``, the
long-run average age of source ``k`` is

    (1 + rho + 3*rhat + 3*rhat*rho + 3*rhat^2 + rhat^2*rho + rhat^3)
    -----------------------------------------------------------------
                      mu * rho * (1 + rhat)

which algebraically splits into two convex-over-concave fractions

    (rhat^2 + 3*rhat + 1) / (mu * (1 + rhat))  +  (rhat + 1)^2 / (mu * rho),

so minimizing the sum age over the box ``0 <= lambda_k <= mu`` is a
min-only mixed fractional program with ``2K`` ratio terms. Note the age is
*not* symmetric under permuting the rates: ``rhat_k`` depends on the
source order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .fp_core import MixedFpProblem, OuterFunction, RatioTerm, SmoothFn
from .solver import (
    FeasibleSet,
    IterationRecord,
    IterationTrace,
    SolveOptions,
    project_box,
    run_mm,
)

# Rates at or below this fraction of mu are outside the open domain: the
# average age diverges as lambda_k -> 0.
_RATE_FLOOR_REL = 1e-9


@dataclass(frozen=True)
class AoiScenario:
    """Number of sources and the shared service rate (packets/unit time)."""

    k: int
    mu: float

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError("need at least one source")
        if self.mu <= 0:
            raise InvalidInputError("service rate must be positive")


def _loads(rates: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray]:
    rho = np.asarray(rates, dtype=float) / mu
    rho_hat = np.concatenate(([0.0], np.cumsum(rho[:-1])))
    return rho, rho_hat


def avg_aoi(source: int, rates, mu: float) -> float:
    """Average age of ``source`` (0-based) at the given rate vector.

    Returns ``+inf`` when the source's own rate is zero.
    """
    rho, rho_hat = _loads(np.asarray(rates, dtype=float), mu)
    r = rho[source]
    if r <= 0:
        return math.inf
    h = rho_hat[source]
    num = 1 + r + 3 * h + 3 * h * r + 3 * h * h + h * h * r + h**3
    return num / (mu * r * (1 + h))


def avg_aoi_decomposed(source: int, rates, mu: float) -> tuple[float, float]:
    """The two-fraction split of :func:`avg_aoi`; the parts sum to it exactly."""
    rho, rho_hat = _loads(np.asarray(rates, dtype=float), mu)
    r = rho[source]
    h = rho_hat[source]
    first = (h * h + 3 * h + 1) / (mu * (1 + h))
    second = math.inf if r <= 0 else (h + 1) ** 2 / (mu * r)
    return first, second


def sum_aoi(rates, mu: float) -> float:
    """Total average age across all sources."""
    rates = np.asarray(rates, dtype=float)
    return float(sum(avg_aoi(k, rates, mu) for k in range(rates.size)))


def _sum_aoi_batch(rate_rows: np.ndarray, mu: float) -> np.ndarray:
    """Vectorized :func:`sum_aoi` over rows of a (batch, K) rate array."""
    rho = rate_rows / mu
    rho_hat = np.concatenate(
        [np.zeros((rho.shape[0], 1)), np.cumsum(rho[:, :-1], axis=1)], axis=1
    )
    num = (
        1
        + rho
        + 3 * rho_hat
        + 3 * rho_hat * rho
        + 3 * rho_hat**2
        + rho_hat**2 * rho
        + rho_hat**3
    )
    with np.errstate(divide="ignore"):
        per_source = np.where(
            rho > 0, num / (mu * np.maximum(rho, 1e-300) * (1 + rho_hat)), np.inf
        )
    return per_source.sum(axis=1)


def build_aoi_problem(scenario: AoiScenario) -> MixedFpProblem:
    """Min-only mixed FP whose objective equals minus the total average age.

    All ``2K`` terms carry the decreasing outer ``-r``; numerators are
    convex and denominators concave in the rates, with analytic gradients.
    """
    k_sources = scenario.k
    mu = scenario.mu
    terms = []
    for k in range(k_sources):
        mask = np.zeros(k_sources)
        mask[:k] = 1.0  # rhat_k depends on the earlier rates only

        def make_pair(k=k, mask=mask):
            def rhat(x):
                return float(mask @ x) / mu

            num1 = SmoothFn(
                value=lambda x: rhat(x) ** 2 + 3 * rhat(x) + 1,
                grad=lambda x: (2 * rhat(x) + 3) / mu * mask,
            )
            den1 = SmoothFn(
                value=lambda x: mu * (1 + rhat(x)),
                grad=lambda x: mask.copy(),
            )
            e_k = np.zeros(k_sources)
            e_k[k] = 1.0
            num2 = SmoothFn(
                value=lambda x: (rhat(x) + 1) ** 2,
                grad=lambda x: 2 * (rhat(x) + 1) / mu * mask,
            )
            den2 = SmoothFn(value=lambda x: float(x[k]), grad=lambda x: e_k.copy())
            return num1, den1, num2, den2

        num1, den1, num2, den2 = make_pair()
        outer = OuterFunction.neg_identity(1.0)
        terms.append(RatioTerm(num1, den1, outer, side="min"))
        terms.append(RatioTerm(num2, den2, outer, side="min"))

    floor = _RATE_FLOOR_REL * mu
    feasible = FeasibleSet(
        project=lambda x: project_box(x, 0.0, mu),
        in_domain=lambda x: bool(np.all(np.asarray(x) > floor)),
    )
    return MixedFpProblem(terms=tuple(terms), feasible=feasible)


def _as_min_trace(trace: IterationTrace) -> IterationTrace:
    """Re-sign a maximization trace into the minimized quantity."""
    records = [
        IterationRecord(r.outer_index, -r.objective, r.wall_ms, r.inner_iterations)
        for r in trace.records
    ]
    return IterationTrace(records=records, status=trace.status)


def run_algorithm1(
    scenario: AoiScenario, opts: SolveOptions | None = None
) -> tuple[np.ndarray, IterationTrace]:
    """Alternating rate control from the interior start ``lambda_k = mu/K``.

    The returned trace reports the total average age (positive,
    nonincreasing) per outer iteration.
    """
    problem = build_aoi_problem(scenario)
    x0 = np.full(scenario.k, scenario.mu / scenario.k)
    rates, trace = run_mm(problem, x0, opts)
    return rates, _as_min_trace(trace)


def baseline_max_rate(scenario: AoiScenario) -> tuple[np.ndarray, float]:
    """Every source transmits at the full service rate."""
    rates = np.full(scenario.k, scenario.mu)
    return rates, sum_aoi(rates, scenario.mu)


def baseline_equal_rate(
    scenario: AoiScenario, grid_step_rel: float = 1e-4
) -> tuple[np.ndarray, float]:
    """Best common rate: dense 1-D grid scan plus golden-section refinement."""
    mu = scenario.mu
    n = int(round(1.0 / grid_step_rel))
    lam = mu * np.arange(1, n + 1) / n
    values = _sum_aoi_batch(np.repeat(lam[:, None], scenario.k, axis=1), mu)
    i_best = int(np.argmin(values))
    lo = lam[max(i_best - 1, 0)]
    hi = lam[min(i_best + 1, n - 1)]

    phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)

    def f(v: float) -> float:
        return sum_aoi(np.full(scenario.k, v), mu)

    fc, fd = f(c), f(d)
    for _ in range(60):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    best = (a + b) / 2.0
    if f(best) > values[i_best]:
        best = float(lam[i_best])
    return np.full(scenario.k, best), f(best)


def oracle_grid(
    scenario: AoiScenario,
    coarse_step: float | None = None,
    refine_rounds: int = 3,
) -> tuple[np.ndarray, float]:
    """Exhaustive grid search over the rate box, then local refinement.

    Cost grows exponentially in ``K``; refuses ``K > 3``.
    """
    if scenario.k > 3:
        raise InvalidInputError("exhaustive search is limited to K <= 3")
    mu = scenario.mu
    step = coarse_step if coarse_step is not None else 0.02 * mu
    axes = [np.arange(step, mu + step / 2, step) for _ in range(scenario.k)]
    grids = np.meshgrid(*axes, indexing="ij")
    batch = np.stack([g.ravel() for g in grids], axis=1)
    values = _sum_aoi_batch(batch, mu)
    best = batch[int(np.argmin(values))]
    best_val = float(values.min())

    for _ in range(refine_rounds):
        new_step = step / 10.0
        axes = [
            np.clip(best[d] + new_step * np.arange(-10, 11), 1e-9 * mu, mu)
            for d in range(scenario.k)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        batch = np.stack([g.ravel() for g in grids], axis=1)
        values = _sum_aoi_batch(batch, mu)
        if values.min() < best_val:
            best = batch[int(np.argmin(values))]
            best_val = float(values.min())
        step = new_step

    return best, best_val
