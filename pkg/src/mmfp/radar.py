"""Waveform design minimizing the sum of estimation-error lower bounds
across mutually interfering radar sets.

``M`` co-channel radars observe a common point target. Radar ``m`` collects
``L`` echo samples through an ``N_R_m``-element uniform linear array while
every radar ``m'`` transmits the vectorized waveform ``s_m'`` through its
``N_T_m'``-element array. The cross-radar echo response is the rank-1
matrix ``G_mm' = beta_mm' * a_R(theta_m) a_T(theta_m')^T``, lifted to
sample space as ``T_mm' = I_L kron G_mm'``. With

    K_m  = sum_{m' != m} (T_mm' s_m')(T_mm' s_m')^H + sigma_m^2 I
    v_m  = (I_L kron dG_mm/dtheta) s_m

the curvature of radar m's likelihood in its arrival angle is
``J_m = 2 v_m^H K_m^{-1} v_m`` and the estimator-variance lower bound is
``1/J_m``. The design problem minimizes ``sum_m 1/J_m`` under per-radar
power balls ``||s_m||^2 <= P_m``.

Each ``v_m^H K_m^{-1} v_m`` is a width-1 matrix ratio; its max-side
decoupling bracket

    Q_m = 2 Re(Y_m^H v_m) - sum_{m' != m} |Y_m^H T_mm' s_m'|^2
          - sigma_m^2 ||Y_m||^2

is concave in the stacked real coordinates of all waveforms jointly (the
lifted covariance variable that would make ``K_m`` affine is eliminated:
the bracket is nonincreasing in its slack, so the rank-1 choice is
optimal for the subproblem). The driver alternates ``Y_m = K_m^{-1} v_m``
with maximizing ``sum_m -1/(2 Q_m)``, whose value at the update point is
exactly ``-sum_m 1/J_m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .solver import (
    FeasibleSet,
    IterationRecord,
    IterationTrace,
    SolveOptions,
    project_ball,
    run_mm,
)
from .units import dbm_to_mw


@dataclass(frozen=True)
class RadarScenario:
    """Geometry, reflection gains, noise and power budgets of the radar set.

    ``beta[m, m']`` is the complex reflection gain from radar ``m'`` into
    radar ``m``; ``sigma2`` and ``power`` are in mW; ``theta`` in radians.
    """

    n_tx: tuple[int, ...]
    n_rx: tuple[int, ...]
    theta: tuple[float, ...]
    beta: tuple[tuple[complex, ...], ...]
    sigma2: tuple[float, ...]
    power: tuple[float, ...]
    l_samples: int

    def __post_init__(self):
        m = len(self.n_tx)
        if m < 1 or self.l_samples < 1:
            raise InvalidInputError("need at least one radar and one sample")
        if not (len(self.n_rx) == len(self.theta) == len(self.sigma2) == len(self.power) == m):
            raise InvalidInputError("per-radar field lengths disagree")
        if len(self.beta) != m or any(len(row) != m for row in self.beta):
            raise InvalidInputError("beta must be M x M")
        if min(self.n_tx) < 1 or min(self.n_rx) < 1:
            raise InvalidInputError("antenna counts must be at least 1")
        if min(self.sigma2) <= 0 or min(self.power) <= 0:
            raise InvalidInputError("noise powers and power budgets must be positive")

    @property
    def m_radars(self) -> int:
        return len(self.n_tx)

    def waveform_length(self, m: int) -> int:
        return self.l_samples * self.n_tx[m]


def benchmark_scenario(p_dbm: float = 30.0, sigma2_mw: float = 1.0) -> RadarScenario:
    """Five co-channel radars with unit reflection gains (experiment setup)."""
    theta = (math.pi / 6, math.pi / 3, math.pi / 4, 2 * math.pi / 5, 3 * math.pi / 7)
    ones = tuple(tuple(1.0 + 0.0j for _ in range(5)) for _ in range(5))
    return RadarScenario(
        n_tx=(4, 2, 2, 2, 2),
        n_rx=(6, 4, 4, 4, 4),
        theta=theta,
        beta=ones,
        sigma2=(sigma2_mw,) * 5,
        power=(dbm_to_mw(p_dbm),) * 5,
        l_samples=4,
    )


def steering_vector(n: int, theta: float) -> np.ndarray:
    """Half-wavelength ULA response: entries ``exp(-j*pi*k*sin(theta))``."""
    if n < 1:
        raise InvalidInputError("need at least one antenna")
    return np.exp(-1j * math.pi * np.arange(n) * math.sin(theta))


def steering_derivative(n: int, theta: float) -> np.ndarray:
    """Entrywise angle derivative of :func:`steering_vector`."""
    if n < 1:
        raise InvalidInputError("need at least one antenna")
    k = np.arange(n)
    return -1j * math.pi * k * math.cos(theta) * np.exp(-1j * math.pi * k * math.sin(theta))


def response_matrix(scenario: RadarScenario, m: int, m_prime: int) -> np.ndarray:
    """Rank-1 echo response ``beta * a_R(theta_m) a_T(theta_m')^T``.

    Plain transpose on the transmit steering vector, not conjugate.
    """
    a_r = steering_vector(scenario.n_rx[m], scenario.theta[m])
    a_t = steering_vector(scenario.n_tx[m_prime], scenario.theta[m_prime])
    return complex(scenario.beta[m][m_prime]) * np.outer(a_r, a_t)


def response_derivative(scenario: RadarScenario, m: int) -> np.ndarray:
    """Angle derivative of the self-response ``G_mm`` (product rule over
    both steering vectors)."""
    a_r = steering_vector(scenario.n_rx[m], scenario.theta[m])
    a_t = steering_vector(scenario.n_tx[m], scenario.theta[m])
    da_r = steering_derivative(scenario.n_rx[m], scenario.theta[m])
    da_t = steering_derivative(scenario.n_tx[m], scenario.theta[m])
    return complex(scenario.beta[m][m]) * (np.outer(da_r, a_t) + np.outer(a_r, da_t))


class _Operators:
    """Sample-space lifts ``T[m][m'] = I_L kron G_mm'`` and
    ``D[m] = I_L kron dG_mm``, built once per scenario."""

    def __init__(self, scenario: RadarScenario):
        eye_l = np.eye(scenario.l_samples)
        m_radars = scenario.m_radars
        self.T = [
            [np.kron(eye_l, response_matrix(scenario, m, mp)) for mp in range(m_radars)]
            for m in range(m_radars)
        ]
        self.D = [
            np.kron(eye_l, response_derivative(scenario, m)) for m in range(m_radars)
        ]
        self.s_dims = [scenario.waveform_length(m) for m in range(m_radars)]
        self.f_dims = [scenario.l_samples * scenario.n_rx[m] for m in range(m_radars)]
        # block layout of the stacked real decision vector [Re s_m; Im s_m]
        self.blocks = []
        start = 0
        for d in self.s_dims:
            self.blocks.append((start, start + 2 * d))
            start += 2 * d
        self.total_real_dim = start


def stack_waveforms(waveforms: list[np.ndarray]) -> np.ndarray:
    """Concatenate ``[Re s_m; Im s_m]`` blocks into one real vector."""
    parts = []
    for s in waveforms:
        parts.append(np.real(s))
        parts.append(np.imag(s))
    return np.concatenate(parts)


def unstack_waveforms(z: np.ndarray, dims: list[int]) -> list[np.ndarray]:
    out = []
    pos = 0
    for d in dims:
        re = z[pos : pos + d]
        im = z[pos + d : pos + 2 * d]
        out.append(re + 1j * im)
        pos += 2 * d
    return out


def covariance_K(scenario: RadarScenario, waveforms: list[np.ndarray], m: int) -> np.ndarray:
    """Interference-plus-noise covariance at radar ``m`` (Hermitian PD)."""
    ops = _Operators(scenario)
    return _covariance(ops, scenario, waveforms, m)


def _covariance(
    ops: _Operators, scenario: RadarScenario, waveforms: list[np.ndarray], m: int
) -> np.ndarray:
    n = ops.f_dims[m]
    K = scenario.sigma2[m] * np.eye(n, dtype=complex)
    for mp in range(scenario.m_radars):
        if mp == m:
            continue
        u = ops.T[m][mp] @ waveforms[mp]
        K += np.outer(u, u.conj())
    return K


def fisher_information(
    scenario: RadarScenario, waveforms: list[np.ndarray], m: int
) -> float:
    """Likelihood curvature ``2 v^H K^{-1} v`` in radar m's arrival angle.

    Zero when the derivative signal vanishes (the bound is then infinite).
    """
    ops = _Operators(scenario)
    return _fisher(ops, scenario, waveforms, m)


def _fisher(
    ops: _Operators, scenario: RadarScenario, waveforms: list[np.ndarray], m: int
) -> float:
    v = ops.D[m] @ waveforms[m]
    if np.linalg.norm(v) == 0.0:
        return 0.0
    K = _covariance(ops, scenario, waveforms, m)
    return 2.0 * float(np.real(v.conj() @ np.linalg.solve(K, v)))


def sum_crb(scenario: RadarScenario, waveforms: list[np.ndarray]) -> float:
    """Sum of the per-radar estimator-variance lower bounds ``1/J_m``."""
    ops = _Operators(scenario)
    return _sum_crb(ops, scenario, waveforms)


def _sum_crb(ops: _Operators, scenario: RadarScenario, waveforms: list[np.ndarray]) -> float:
    total = 0.0
    for m in range(scenario.m_radars):
        j = _fisher(ops, scenario, waveforms, m)
        if j <= 0.0:
            return math.inf
        total += 1.0 / j
    return total


def radar_aux_update(
    scenario: RadarScenario, waveforms: list[np.ndarray], m: int
) -> np.ndarray:
    """Closed-form auxiliary ``Y_m = K_m^{-1} v_m`` at the current waveforms."""
    ops = _Operators(scenario)
    K = _covariance(ops, scenario, waveforms, m)
    return np.linalg.solve(K, ops.D[m] @ waveforms[m])


@dataclass(frozen=True)
class RadarAux:
    """Frozen auxiliaries plus per-term constants for fast bracket evaluation.

    ``affine[m] = D_m^H Y_m``; ``cross[m][m'] = T_mm'^H Y_m`` (m' != m);
    ``noise[m] = sigma_m^2 ||Y_m||^2``.
    """

    Y: list[np.ndarray]
    affine: list[np.ndarray]
    cross: list[list[np.ndarray | None]]
    noise: list[float]


class RadarMmProblem:
    """Driver-protocol problem over the stacked real waveform coordinates."""

    def __init__(self, scenario: RadarScenario):
        self.scenario = scenario
        self.ops = _Operators(scenario)
        self.feasible = FeasibleSet(project=self._project)

    def _project(self, z: np.ndarray) -> np.ndarray:
        out = np.asarray(z, dtype=float).copy()
        for (a, b), p in zip(self.ops.blocks, self.scenario.power):
            out[a:b] = project_ball(out[a:b], p)
        return out

    def split(self, z: np.ndarray) -> list[np.ndarray]:
        return unstack_waveforms(np.asarray(z, dtype=float), self.ops.s_dims)

    def objective(self, z: np.ndarray) -> float:
        val = _sum_crb(self.ops, self.scenario, self.split(z))
        return -val  # maximization convention

    def update_aux(self, z: np.ndarray, eps: float = 1e-12) -> RadarAux:
        waveforms = self.split(z)
        m_radars = self.scenario.m_radars
        Y = []
        for m in range(m_radars):
            K = _covariance(self.ops, self.scenario, waveforms, m)
            Y.append(np.linalg.solve(K, self.ops.D[m] @ waveforms[m]))
        affine = [self.ops.D[m].conj().T @ Y[m] for m in range(m_radars)]
        cross: list[list[np.ndarray | None]] = [
            [
                self.ops.T[m][mp].conj().T @ Y[m] if mp != m else None
                for mp in range(m_radars)
            ]
            for m in range(m_radars)
        ]
        noise = [
            self.scenario.sigma2[m] * float(np.real(np.vdot(Y[m], Y[m])))
            for m in range(m_radars)
        ]
        return RadarAux(Y=Y, affine=affine, cross=cross, noise=noise)

    def _brackets(self, waveforms: list[np.ndarray], aux: RadarAux) -> np.ndarray:
        m_radars = self.scenario.m_radars
        q = np.empty(m_radars)
        for m in range(m_radars):
            val = 2.0 * float(np.real(np.vdot(aux.affine[m], waveforms[m]))) - aux.noise[m]
            for mp in range(m_radars):
                if mp == m:
                    continue
                val -= abs(np.vdot(aux.cross[m][mp], waveforms[mp])) ** 2
            q[m] = val
        return q

    def surrogate(self, z: np.ndarray, aux: RadarAux) -> tuple[float, np.ndarray | None]:
        waveforms = self.split(z)
        q = self._brackets(waveforms, aux)
        if np.any(q <= 0.0):
            return -math.inf, None
        value = float(np.sum(-0.5 / q))
        weights = 0.5 / (q * q)  # d(-1/(2q))/dq
        m_radars = self.scenario.m_radars
        grad_c = [weights[m] * aux.affine[m] for m in range(m_radars)]
        for m in range(m_radars):
            for mp in range(m_radars):
                if mp == m:
                    continue
                a = aux.cross[m][mp]
                grad_c[mp] = grad_c[mp] - weights[m] * a * np.vdot(a, waveforms[mp])
        grad = np.empty_like(np.asarray(z, dtype=float))
        for m, (lo, hi) in enumerate(self.ops.blocks):
            d = self.ops.s_dims[m]
            grad[lo : lo + d] = 2.0 * np.real(grad_c[m])
            grad[lo + d : hi] = 2.0 * np.imag(grad_c[m])
        return value, grad


def radar_subproblem_objective(
    scenario: RadarScenario, waveforms: list[np.ndarray], aux: RadarAux
) -> tuple[float, np.ndarray | None]:
    """Bracket-sum surrogate value and stacked-real gradient (reject=-inf)."""
    problem = RadarMmProblem(scenario)
    return problem.surrogate(stack_waveforms(waveforms), aux)


def initial_waveforms(scenario: RadarScenario, seed: int = 0) -> list[np.ndarray]:
    """Flat max-power start, perturbed only if the derivative signal is
    degenerate there."""
    rng = np.random.default_rng(seed)
    ops = _Operators(scenario)
    waveforms = []
    for m in range(scenario.m_radars):
        n = scenario.waveform_length(m)
        s = np.full(n, math.sqrt(scenario.power[m] / n), dtype=complex)
        d_scale = np.linalg.norm(ops.D[m], "fro") * np.linalg.norm(s)
        if np.linalg.norm(ops.D[m] @ s) <= 1e-12 * max(d_scale, 1e-300):
            noise = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            s = s + 1e-3 * np.linalg.norm(s) * noise / np.linalg.norm(noise)
            s = project_ball(s, scenario.power[m])
        waveforms.append(s)
    return waveforms


def run_algorithm2(
    scenario: RadarScenario, opts: SolveOptions | None = None
) -> tuple[list[np.ndarray], IterationTrace]:
    """Alternating waveform design; the trace reports the bound sum
    (positive, nonincreasing) per outer iteration."""
    opts = opts or SolveOptions()
    problem = RadarMmProblem(scenario)
    z0 = stack_waveforms(initial_waveforms(scenario, seed=opts.seed))
    z, trace = run_mm(problem, z0, opts)
    records = [
        IterationRecord(r.outer_index, -r.objective, r.wall_ms, r.inner_iterations)
        for r in trace.records
    ]
    return problem.split(z), IterationTrace(records=records, status=trace.status)


def lifted_covariance(
    scenario: RadarScenario, u_matrices: list[np.ndarray], m: int
) -> np.ndarray:
    """Covariance with the rank-1 waveform outer products replaced by
    arbitrary PSD lift variables (consistency checks)."""
    ops = _Operators(scenario)
    n = ops.f_dims[m]
    lam = scenario.sigma2[m] * np.eye(n, dtype=complex)
    for mp in range(scenario.m_radars):
        if mp == m:
            continue
        t = ops.T[m][mp]
        lam += t @ u_matrices[mp] @ t.conj().T
    return lam


def lifted_sum_crb(
    scenario: RadarScenario, waveforms: list[np.ndarray], u_matrices: list[np.ndarray]
) -> float:
    """Bound sum evaluated with the lifted covariance variables."""
    ops = _Operators(scenario)
    total = 0.0
    for m in range(scenario.m_radars):
        v = ops.D[m] @ waveforms[m]
        lam = lifted_covariance(scenario, u_matrices, m)
        j = 2.0 * float(np.real(v.conj() @ np.linalg.solve(lam, v)))
        if j <= 0.0:
            return math.inf
        total += 1.0 / j
    return total
