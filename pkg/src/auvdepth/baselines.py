"""Model-based comparison controllers.

Two controllers close the loop from opposite directions:

  * LQI: linear-quadratic state feedback plus output integrators on a fixed
    linearized plant. The continuous algebraic Riccati equation is solved
    once (dense seed, then Newton iterations with Lyapunov solves until the
    residual is below 1e-10) and the gain is applied sample-and-hold.
  * NMPC: receding-horizon planning on the exact nonlinear model. Each
    solve alternates a forward rollout with a backward adjoint sweep whose
    multipliers eliminate the state-sequence terms of the cost gradient,
    then takes a projected gradient step with backtracking; plans are
    warm-started from the previous step's shifted sequence.

Both saturate through ControlInput, like every other controller here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_are, solve_continuous_lyapunov

from .dynamics import (
    TAU1_MAX,
    TAU2_MAX,
    ControlInput,
    HydroParams,
    VehicleState,
    _motion_loads,
    linearize_motion,
)

_U_LO = np.array([-TAU1_MAX, -TAU2_MAX])
_U_HI = np.array([TAU1_MAX, TAU2_MAX])


def _assert_stabilizable(A: np.ndarray, B: np.ndarray) -> None:
    """Eigenvector test: every eigenvalue with nonnegative real part must be
    movable through B."""
    scale = max(np.linalg.norm(np.hstack([A, B])), 1.0)
    for lam in np.linalg.eigvals(A):
        if lam.real < 0.0:
            continue
        pencil = np.hstack([A - lam * np.eye(A.shape[0]), B])
        if np.linalg.svd(pencil, compute_uv=False)[-1] < 1e-8 * scale:
            raise ValueError(
                f"pair (A, B) is not stabilizable: mode {lam:.4f} is "
                "unreachable from the inputs")


@dataclass(frozen=True)
class LinearPlant:
    """Fixed linear model x' = Ax + Bu, y = Cx over [w, q, z, theta]."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A, B, C = (np.asarray(m, dtype=float) for m in (self.A, self.B, self.C))
        if A.shape != (4, 4) or B.shape != (4, 2) or C.shape != (2, 4):
            raise ValueError("plant must have A 4x4, B 4x2, C 2x4")
        _assert_stabilizable(A, B)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)


def paper_plant() -> LinearPlant:
    """The published linearization about level flight at 2 m depth."""
    return LinearPlant(
        A=np.array([[-1.0421, 0.7856, 0.0, 0.0207],
                    [6.0038, -0.6624, 0.0, -0.7083],
                    [1.0, 0.0, 0.0, -2.0],
                    [0.0, 1.0, 0.0, 0.0]]),
        B=np.array([[0.0153, 0.0035],
                    [-0.0035, 0.1209],
                    [0.0, 0.0],
                    [0.0, 0.0]]),
        C=np.array([[0.0, 0.0, 1.0, 0.0],
                    [0.0, 0.0, 0.0, 1.0]]),
    )


def solve_riccati(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray,
                  residual_tol: float = 1e-10, max_iter: int = 50):
    """Continuous-time algebraic Riccati solve, polished to a tight residual.

    Returns (P, K, residual_history) with K = R^-1 B' P. A dense solver
    seeds the solution; Newton steps (each a Lyapunov solve on the current
    closed loop) then push ||A'P + PA - PBR^-1B'P + Q|| under residual_tol.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    _assert_stabilizable(A, B)

    def residual(P):
        return np.linalg.norm(
            A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q)

    P = solve_continuous_are(A, B, Q, R)
    P = 0.5 * (P + P.T)
    history = [residual(P)]
    for _ in range(max_iter):
        if history[-1] < residual_tol:
            break
        K = np.linalg.solve(R, B.T @ P)
        A_cl = A - B @ K
        P = solve_continuous_lyapunov(A_cl.T, -(Q + K.T @ R @ K))
        P = 0.5 * (P + P.T)
        history.append(residual(P))
    if history[-1] >= residual_tol:
        raise RuntimeError(
            "Riccati iteration did not reach residual "
            f"{residual_tol:g}; history: "
            + ", ".join(f"{r:.3e}" for r in history))
    K = np.linalg.solve(R, B.T @ P)
    if np.max(np.linalg.eigvals(A - B @ K).real) >= 0.0:
        raise RuntimeError("Riccati gain failed to stabilize the plant")
    return P, K, history


@dataclass(frozen=True)
class LqiGain:
    """Partitioned feedback for the integrator-augmented plant."""

    K_chi: np.ndarray
    K_eps: np.ndarray
    P: np.ndarray
    residuals: list[float]


DEFAULT_LQI_Q = np.diag([1.0, 1.0, 10.0, 10.0, 100.0, 100.0])
DEFAULT_LQI_R = np.diag([0.01, 0.01])


def build_lqi_gain(plant: LinearPlant, Q_aug: np.ndarray | None = None,
                   R: np.ndarray | None = None) -> LqiGain:
    """Augment the plant with output integrators and solve for the gain.

    Augmented state [w, q, z, theta, eps_z, eps_theta] with
    eps' = -(y - y_r); the reference enters as an exogenous input and does
    not affect the gain.
    """
    Q_aug = DEFAULT_LQI_Q if Q_aug is None else np.asarray(Q_aug, dtype=float)
    R = DEFAULT_LQI_R if R is None else np.asarray(R, dtype=float)
    A_aug = np.block([[plant.A, np.zeros((4, 2))],
                      [-plant.C, np.zeros((2, 2))]])
    B_aug = np.vstack([plant.B, np.zeros((2, 2))])
    P, K, history = solve_riccati(A_aug, B_aug, Q_aug, R)
    return LqiGain(K_chi=K[:, :4], K_eps=K[:, 4:], P=P, residuals=history)


def lqi_control(gain: LqiGain, state: VehicleState, eps: np.ndarray,
                z_ref: float, theta_ref: float = 0.0,
                dt: float = 0.1) -> tuple[ControlInput, np.ndarray]:
    """One sample of the integral feedback law.

    Returns the saturated control for the current instant and the integrator
    state advanced by dt*(y_r - y); the caller carries eps between calls.
    The deviation form works because the plant's depth column is zero, so a
    constant-depth shift is itself an equilibrium direction.
    """
    dev = np.array([state.w, state.q, state.z - z_ref, state.theta - theta_ref])
    u = -(gain.K_chi @ dev + gain.K_eps @ np.asarray(eps, dtype=float))
    y = np.array([state.z, state.theta])
    eps_next = np.asarray(eps, dtype=float) + dt * (np.array([z_ref, theta_ref]) - y)
    return ControlInput(float(u[0]), float(u[1])), eps_next


class LqiController:
    """Closed-loop wrapper that owns the integrator state."""

    def __init__(self, gain: LqiGain, z_ref: float, theta_ref: float = 0.0,
                 dt: float = 0.1):
        self.gain = gain
        self.z_ref = float(z_ref)
        self.theta_ref = float(theta_ref)
        self.dt = float(dt)
        self.eps = np.zeros(2)

    def reset(self) -> None:
        self.eps = np.zeros(2)

    def retarget(self, z_ref: float) -> None:
        """Move the depth reference; the integrator state is kept."""
        self.z_ref = float(z_ref)

    def control(self, state: VehicleState) -> ControlInput:
        u, self.eps = lqi_control(self.gain, state, self.eps, self.z_ref,
                                  self.theta_ref, self.dt)
        return u


# ---------------------------------------------------------------------------
# Receding-horizon planner
# ---------------------------------------------------------------------------

@dataclass
class NmpcConfig:
    """Planner settings: horizon length, stage/terminal weights over
    [w, q, z, theta] deviations, control weight, and solver knobs."""

    horizon: int = 30
    Q: np.ndarray = field(default_factory=lambda: np.diag([0.05, 0.05, 10.0, 2.0]))
    R: np.ndarray = field(default_factory=lambda: np.diag([0.001, 0.001]))
    P0: np.ndarray | None = None
    max_sweeps: int = 200
    tol: float = 1e-6
    step_size: float = 10.0
    max_halvings: int = 20

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        self.Q = np.asarray(self.Q, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.P0 = self.Q.copy() if self.P0 is None else np.asarray(self.P0, dtype=float)
        for name, M, n in (("Q", self.Q, 4), ("P0", self.P0, 4), ("R", self.R, 2)):
            if M.shape != (n, n):
                raise ValueError(f"{name} must be {n}x{n}")
            if not np.allclose(M, M.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
        if np.any(np.linalg.eigvalsh(self.Q) < -1e-12) or \
                np.any(np.linalg.eigvalsh(self.P0) < -1e-12):
            raise ValueError("Q and P0 must be positive semidefinite")
        if np.any(np.linalg.eigvalsh(self.R) <= 0.0):
            raise ValueError("R must be positive definite")
        if self.max_sweeps < 1 or self.tol <= 0 or self.step_size <= 0 \
                or self.max_halvings < 0:
            raise ValueError("solver knobs must be positive (max_halvings >= 0)")


class EulerAuvModel:
    """Noise-free discrete prediction model over [w, q, z, theta]."""

    def __init__(self, params: HydroParams, u0: float, dt: float):
        self.params = params
        self.u0 = float(u0)
        self.dt = float(dt)
        a, b, c, d = params.mass_matrix_entries()
        det = a * d - b * c
        self._minv = np.array([[d, -b], [-c, a]]) / det

    def f(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        w, q, z, theta = x
        heave, pitch = _motion_loads(self.params, self.u0, w, q, theta,
                                     u[0], u[1])
        acc = self._minv @ np.array([heave, pitch])
        return np.array([
            w + self.dt * acc[0],
            q + self.dt * acc[1],
            z + self.dt * (w * np.cos(theta) - self.u0 * np.sin(theta)),
            theta + self.dt * q,
        ])

    def jacobians(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        Ac, Bc = linearize_motion(self.params, self.u0, x[0], x[1], x[3])
        return np.eye(4) + self.dt * Ac, self.dt * Bc


class LinearModel:
    """Discrete linear prediction model, mainly for oracle comparisons."""

    def __init__(self, Ad: np.ndarray, Bd: np.ndarray):
        self.Ad = np.asarray(Ad, dtype=float)
        self.Bd = np.asarray(Bd, dtype=float)

    def f(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.Ad @ x + self.Bd @ u

    def jacobians(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.Ad, self.Bd


def _rollout(U: np.ndarray, x0: np.ndarray, model) -> list[np.ndarray]:
    states = [np.asarray(x0, dtype=float)]
    for u in U:
        states.append(model.f(states[-1], u))
    return states


def plan_cost(U: np.ndarray, x0: np.ndarray, cfg: NmpcConfig, model,
              x_ref: np.ndarray) -> float:
    """0.5 d_N'P0 d_N + 0.5 sum(d_i'Q d_i + u_i'R u_i), d = x - x_ref."""
    states = _rollout(U, x0, model)
    total = 0.0
    for i in range(len(U)):
        d = states[i] - x_ref
        total += d @ cfg.Q @ d + U[i] @ cfg.R @ U[i]
    d_n = states[-1] - x_ref
    return 0.5 * (total + d_n @ cfg.P0 @ d_n)


def plan_gradient(U: np.ndarray, x0: np.ndarray, cfg: NmpcConfig, model,
                  x_ref: np.ndarray) -> np.ndarray:
    """Adjoint gradient of plan_cost with respect to the control sequence.

    The backward recursion lam_i = Q d_i + A_i' lam_{i+1}, seeded with
    lam_N = P0 d_N, absorbs every state-sequence term, leaving
    dJ/du_i = R u_i + B_i' lam_{i+1}.
    """
    states = _rollout(U, x0, model)
    n = len(U)
    G = np.empty_like(U)
    lam = cfg.P0 @ (states[-1] - x_ref)
    for i in range(n - 1, -1, -1):
        A_i, B_i = model.jacobians(states[i], U[i])
        G[i] = cfg.R @ U[i] + B_i.T @ lam
        lam = cfg.Q @ (states[i] - x_ref) + A_i.T @ lam
    return G


@dataclass
class PlanResult:
    controls: np.ndarray
    cost: float
    sweeps: int
    stalled: bool
    cost_history: list[float]


def nmpc_plan(x0: np.ndarray, cfg: NmpcConfig, model,
              x_ref: np.ndarray, init: np.ndarray | None = None) -> PlanResult:
    """Minimize the horizon cost by projected gradient descent.

    Each sweep recomputes the adjoint gradient, picks a trial step (spectral
    estimate from the previous sweep's secant pair; before a secant pair
    exists, the config step divided by the gradient's sup norm so the first
    move is bounded in control units no matter how steep the landscape), and
    backtracks by halving until the cost decreases; candidates are clipped
    to the actuator box before evaluation. Stops when the accepted update
    moves no component more than tol. If no halving finds a decrease the
    current sequence is returned with the stall flag set.
    """
    x0 = np.asarray(x0, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    n = cfg.horizon
    if init is None:
        U = np.zeros((n, 2))
    else:
        U = np.clip(np.asarray(init, dtype=float).reshape(n, 2), _U_LO, _U_HI)
    cost = plan_cost(U, x0, cfg, model, x_ref)
    history = [cost]
    prev_u = prev_g = None
    sweeps = 0
    stalled = False
    while sweeps < cfg.max_sweeps:
        sweeps += 1
        G = plan_gradient(U, x0, cfg, model, x_ref)
        alpha = cfg.step_size / (1.0 + float(np.max(np.abs(G))))
        if prev_g is not None:
            du = (U - prev_u).ravel()
            dg = (G - prev_g).ravel()
            denom = du @ dg
            if denom > 1e-32:
                alpha = min(max(du @ du / denom, 1e-8), 1e8)
        candidate = np.clip(U - alpha * G, _U_LO, _U_HI)
        if np.max(np.abs(candidate - U)) < cfg.tol:
            break  # projected step moves nothing: converged
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            cand_cost = plan_cost(candidate, x0, cfg, model, x_ref)
            if cand_cost < cost:
                accepted = True
                break
            alpha *= 0.5
            candidate = np.clip(U - alpha * G, _U_LO, _U_HI)
        if not accepted:
            stalled = True
            break
        moved = np.max(np.abs(candidate - U))
        prev_u, prev_g = U, G
        U, cost = candidate, cand_cost
        history.append(cost)
        if moved < cfg.tol:
            break
    return PlanResult(controls=U, cost=cost, sweeps=sweeps, stalled=stalled,
                      cost_history=history)


class NmpcController:
    """Receding-horizon wrapper: plan, apply the first control, shift."""

    def __init__(self, cfg: NmpcConfig, model, z_ref: float,
                 theta_ref: float = 0.0):
        self.cfg = cfg
        self.model = model
        self.x_ref = np.array([0.0, 0.0, float(z_ref), float(theta_ref)])
        self.last_plan: PlanResult | None = None

    def reset(self) -> None:
        self.last_plan = None

    def retarget(self, z_ref: float) -> None:
        """Move the depth reference; the warm start is kept."""
        self.x_ref[2] = float(z_ref)

    def control(self, state: VehicleState) -> ControlInput:
        x = np.array([state.w, state.q, state.z, state.theta])
        init = None
        if self.last_plan is not None:
            prev = self.last_plan.controls
            init = np.vstack([prev[1:], prev[-1:]])
        self.last_plan = nmpc_plan(x, self.cfg, self.model, self.x_ref, init)
        u = self.last_plan.controls[0]
        return ControlInput(float(u[0]), float(u[1]))
