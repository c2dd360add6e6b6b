"""Dual decoupling for log-ratio objectives.

Objectives of the form

    sum_n w_n * ln(1 + A_n/B_n)  -  sum_m w_m * ln(1 + A_m/B_m)

are awkward for numerical solvers because the ratios sit inside logarithms.
Introducing one auxiliary per ratio moves them outside:

    zeta+ (w, g, A, B)  = w*ln(1+g)  - w*g  + w*(1+g) * A/(A+B)
    zeta- (w, gt, A, B) = w*ln(1-gt) + w*gt - w*(1-gt) * A/B

Maximizing over the auxiliaries recovers the log terms exactly; the
closed-form maximizers are ``g = A/B`` and ``gt = A/(A+B)``. With the
auxiliaries frozen at an anchor point, the summed zetas minorize the
original objective and depend on x only through the two plain fractions,
so one more pass of the quadratic transforms of :mod:`mmfp.fp_core` yields
a logarithm-free concave subproblem (:class:`LogRatioMmProblem`).

All values are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidInputError
from .fp_core import SmoothFn, _SQRT_GRAD_FLOOR
from .solver import FeasibleSet

# Keep ln(1 - gamma_tilde) finite; the closed form can only approach 1 when
# the denominator vanishes, which feasibility excludes.
_GAMMA_TILDE_MAX = 1.0 - 1e-12


def opt_gamma(A: float, B: float) -> float:
    """Maximizer ``A/B`` of the increasing-side zeta over its auxiliary."""
    if A < 0 or B <= 0:
        raise InvalidInputError(f"need A >= 0 and B > 0, got A={A}, B={B}")
    return A / B


def opt_gamma_tilde(A: float, B: float) -> float:
    """Maximizer ``A/(A+B)`` of the decreasing-side zeta, clamped below 1."""
    if A < 0 or B <= 0:
        raise InvalidInputError(f"need A >= 0 and B > 0, got A={A}, B={B}")
    return min(A / (A + B), _GAMMA_TILDE_MAX)


def zeta_plus(w: float, gamma: float, A: float, B: float) -> float:
    """Increasing-side piece; equals ``w*ln(1 + A/B)`` at ``gamma = A/B``."""
    if gamma < 0:
        raise InvalidInputError("gamma must be nonnegative")
    return w * math.log1p(gamma) - w * gamma + w * (1.0 + gamma) * A / (A + B)


def zeta_minus(w: float, gamma_tilde: float, A: float, B: float) -> float:
    """Decreasing-side piece; equals ``-w*ln(1 + A/B)`` at
    ``gamma_tilde = A/(A+B)``."""
    if gamma_tilde < 0:
        raise InvalidInputError("gamma_tilde must be nonnegative")
    if gamma_tilde >= 1.0:
        raise DomainError("gamma_tilde must be below 1")
    return w * math.log1p(-gamma_tilde) + w * gamma_tilde - w * (1.0 - gamma_tilde) * A / B


@dataclass(frozen=True)
class LogRatioTerm:
    """One weighted log-ratio ``+/- w * ln(1 + A(x)/B(x))``."""

    numerator: SmoothFn
    denominator: SmoothFn
    weight: float
    side: str  # "max" or "min"

    def __post_init__(self):
        if self.side not in ("max", "min"):
            raise InvalidInputError(f"side must be 'max' or 'min', got {self.side!r}")
        if self.weight < 0:
            raise InvalidInputError("weight must be nonnegative")


@dataclass(frozen=True)
class GammaState:
    gamma: np.ndarray  # one per max-side term
    gamma_tilde: np.ndarray  # one per min-side term


def _gammas_at(terms: list[LogRatioTerm], x: np.ndarray) -> GammaState:
    gamma = []
    gamma_tilde = []
    for term in terms:
        A = term.numerator.value(x)
        B = term.denominator.value(x)
        if term.side == "max":
            gamma.append(opt_gamma(A, B))
        else:
            gamma_tilde.append(opt_gamma_tilde(A, B))
    return GammaState(gamma=np.array(gamma), gamma_tilde=np.array(gamma_tilde))


def log_ratio_objective(terms: list[LogRatioTerm], x: np.ndarray) -> float:
    total = 0.0
    for term in terms:
        r = term.numerator.value(x) / term.denominator.value(x)
        sgn = 1.0 if term.side == "max" else -1.0
        total += sgn * term.weight * math.log1p(r)
    return total


def log_ratio_surrogate(terms: list[LogRatioTerm], x: np.ndarray, anchor: np.ndarray) -> float:
    """Summed zetas with auxiliaries held at their anchor-point optima.

    Never exceeds the true log-ratio objective; equals it at ``x = anchor``.
    Zero-weight terms are dropped entirely (their zetas are identically 0
    but would otherwise manufacture 0 * inf at degenerate ratios).
    """
    live = [t for t in terms if t.weight > 0]
    gs = _gammas_at(live, np.asarray(anchor, dtype=float))
    value = 0.0
    i_max = 0
    i_min = 0
    for term in live:
        A = term.numerator.value(x)
        B = term.denominator.value(x)
        if term.side == "max":
            value += zeta_plus(term.weight, float(gs.gamma[i_max]), A, B)
            i_max += 1
        else:
            value += zeta_minus(term.weight, float(gs.gamma_tilde[i_min]), A, B)
            i_min += 1
    return value


@dataclass(frozen=True)
class LogRatioAux:
    """Frozen auxiliaries for one MM step: gammas plus the inner-transform
    auxiliaries for the induced sum-of-ratios subproblem."""

    gammas: GammaState
    y: np.ndarray
    y_tilde: np.ndarray
    const: float  # gamma-only zeta pieces, independent of x


@dataclass(frozen=True)
class LogRatioMmProblem:
    """Log-ratio maximization driven by the nested decoupling.

    One outer MM step freezes the gammas, which turns the objective into a
    mixed sum-of-ratios in x; the quadratic transforms then produce a
    concave, logarithm-free subproblem. Implements the driver protocol of
    :mod:`mmfp.solver`.
    """

    terms: tuple[LogRatioTerm, ...]
    feasible: FeasibleSet

    def _live(self) -> list[LogRatioTerm]:
        return [t for t in self.terms if t.weight > 0]

    def objective(self, x: np.ndarray) -> float:
        return log_ratio_objective(list(self.terms), x)

    def objective_grad(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros_like(np.asarray(x, dtype=float))
        for term in self.terms:
            A = term.numerator.value(x)
            B = term.denominator.value(x)
            gA = term.numerator.grad(x)
            gB = term.denominator.grad(x)
            sgn = 1.0 if term.side == "max" else -1.0
            g += sgn * term.weight * (gA * B - A * gB) / (B * (A + B))
        return g

    def update_aux(self, x: np.ndarray, eps: float = 1e-12) -> LogRatioAux:
        live = self._live()
        gs = _gammas_at(live, x)
        y = []
        y_tilde = []
        const = 0.0
        i_max = 0
        i_min = 0
        for term in live:
            A = term.numerator.value(x)
            B = term.denominator.value(x)
            if term.side == "max":
                g = float(gs.gamma[i_max])
                i_max += 1
                # induced max ratio: w(1+g)A over A+B
                y.append(math.sqrt(term.weight * (1.0 + g) * A) / (A + B))
                const += term.weight * (math.log1p(g) - g)
            else:
                gt = float(gs.gamma_tilde[i_min])
                i_min += 1
                # induced min ratio: w(1-gt)A over B
                y_tilde.append(math.sqrt(B) / (term.weight * (1.0 - gt) * A + eps))
                const += term.weight * (math.log1p(-gt) + gt)
        return LogRatioAux(gammas=gs, y=np.array(y), y_tilde=np.array(y_tilde), const=const)

    def surrogate(self, x: np.ndarray, aux: LogRatioAux) -> tuple[float, np.ndarray | None]:
        x = np.asarray(x, dtype=float)
        value = aux.const
        grad = np.zeros_like(x)
        i_max = 0
        i_min = 0
        for term in self._live():
            A = term.numerator.value(x)
            B = term.denominator.value(x)
            gA = term.numerator.grad(x)
            gB = term.denominator.grad(x)
            if term.side == "max":
                y = float(aux.y[i_max])
                g = float(aux.gammas.gamma[i_max])
                i_max += 1
                c = term.weight * (1.0 + g)
                if A < 0:
                    return -math.inf, None
                value += 2.0 * y * math.sqrt(c * A) - y * y * (A + B)
                coeff = (
                    y * c / math.sqrt(max(c * A, _SQRT_GRAD_FLOOR)) if y != 0.0 else 0.0
                )
                grad += coeff * gA - y * y * (gA + gB)
            else:
                yt = float(aux.y_tilde[i_min])
                gt = float(aux.gammas.gamma_tilde[i_min])
                i_min += 1
                ct = term.weight * (1.0 - gt)
                if B < 0:
                    return -math.inf, None
                bracket = 2.0 * yt * math.sqrt(B) - yt * yt * ct * A
                if bracket <= 0.0:
                    return -math.inf, None
                value += -1.0 / bracket
                g_bracket = (yt / math.sqrt(max(B, 1e-300))) * gB - yt * yt * ct * gA
                grad += (1.0 / (bracket * bracket)) * g_bracket
        return value, grad
