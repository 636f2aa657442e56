"""Depth-control decision processes wrapping the planar simulator.

Three tasks share one episode mechanism and differ only in how the
reference is defined and observed:

  * constant depth: hold a fixed target depth;
  * curved depth: follow an analytic depth curve g(x), observing deviations
    from the curve's local flight-path angle;
  * seafloor following: hold a safe offset above a measured seafloor,
    observing a short history window of relative depths (the reference
    geometry itself is never exposed, only sonar-style relative depth).

A step saturates the control, draws the plant disturbance, advances the
simulator by dt, and prices the successor state. Episodes end at the time
horizon, or early with a penalty when the divergence guard trips; the guard
exists because unbounded excursions during exploration would poison any
learner's replay data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlInput, HydroParams, OuProcess, VehicleState, step, wrap_angle
from .profiles import AnalyticProfile, ConstantProfile, SampledProfile


@dataclass(frozen=True)
class CostWeights:
    """Quadratic one-step cost weights: depth, pitch, heave, pitch-rate
    penalties plus a 2x2 control-effort matrix."""

    rho1: float = 1.0
    rho2: float = 2.0
    rho3: float = 0.05
    rho4: float = 0.05
    R: np.ndarray = field(default_factory=lambda: np.diag([0.001, 0.001]))

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho3", "rho4"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative (rho weights)")
        R = np.asarray(self.R, dtype=float)
        if R.shape != (2, 2):
            raise ValueError("R must be 2x2")
        if not np.allclose(R, R.T, atol=1e-12):
            raise ValueError("R must be symmetric")
        if np.any(np.linalg.eigvalsh(R) < -1e-12):
            raise ValueError("R must be positive semidefinite")
        object.__setattr__(self, "R", R)


def step_cost(dz: float, pitch: float, w: float, q: float,
              u: np.ndarray, weights: CostWeights) -> float:
    """rho1*dz^2 + rho2*pitch^2 + rho3*w^2 + rho4*q^2 + u'Ru."""
    u = np.asarray(u, dtype=float)
    return float(weights.rho1 * dz * dz + weights.rho2 * pitch * pitch
                 + weights.rho3 * w * w + weights.rho4 * q * q
                 + u @ weights.R @ u)


# ---------------------------------------------------------------------------
# Observation formulas
# ---------------------------------------------------------------------------

def observe_constant(state: VehicleState, z_ref: float) -> np.ndarray:
    """[z - z_ref, cos(theta), sin(theta), w, q]; the trig pair removes the
    angle's periodicity, the depth offset removes translation."""
    return np.array([state.z - z_ref, np.cos(state.theta), np.sin(state.theta),
                     state.w, state.q])


def observe_curved(state: VehicleState, profile: AnalyticProfile,
                   u0: float) -> np.ndarray:
    """Deviation coordinates against the local curve frame.

    theta_c = atan(g'(x)) is the curve's flight-path angle and its rate
    follows from differentiating through x(t):
    theta_c_dot = g''(x) / (1 + g'(x)^2) * (u0 cos(theta) + w sin(theta)).
    Layout: [z_d, cos(theta_d), sin(theta_d), cos(theta_c), sin(theta_c),
    theta_d_rate, w, q].
    """
    g = profile.depth(state.x)
    g1 = profile.slope(state.x)
    g2 = profile.curvature(state.x)
    theta_c = np.arctan(g1)
    x_rate = u0 * np.cos(state.theta) + state.w * np.sin(state.theta)
    theta_c_rate = g2 / (1.0 + g1 * g1) * x_rate
    theta_d = state.theta - theta_c
    return np.array([state.z - g, np.cos(theta_d), np.sin(theta_d),
                     np.cos(theta_c), np.sin(theta_c),
                     state.q - theta_c_rate, state.w, state.q])


def observe_seafloor(state: VehicleState, profile, window, n: int,
                     safe_offset: float) -> np.ndarray:
    """Last n relative depths (oldest first) plus [cos, sin, w, q].

    The window must already contain the current relative depth as its last
    entry; only relative depth is read from the profile, mimicking a sonar
    altimeter.
    """
    win = list(window)[-n:]
    if len(win) != n:
        raise ValueError(f"window holds {len(win)} entries, need {n}")
    return np.array([*win, np.cos(state.theta), np.sin(state.theta),
                     state.w, state.q])


# ---------------------------------------------------------------------------
# Episode mechanics
# ---------------------------------------------------------------------------

class _PlanarDepthEnv:
    """Shared episode lifecycle; subclasses define the reference."""

    def __init__(self, params: HydroParams | None = None,
                 weights: CostWeights | None = None,
                 dt: float = 0.1, horizon_s: float = 100.0, u0: float = 1.5,
                 disturbance_sigma: float = 0.3, disturbance_beta: float = 0.15,
                 divergence_penalty: float = 500.0,
                 dz_limit: float = 50.0, w_limit: float = 10.0,
                 spawn_radius: float = 6.0, min_depth: float = 0.5,
                 rng: np.random.Generator | int | None = None):
        self.params = params if params is not None else HydroParams()
        self.weights = weights if weights is not None else CostWeights()
        self.dt = float(dt)
        self.horizon_steps = int(round(horizon_s / dt))
        self.u0 = float(u0)
        self.divergence_penalty = float(divergence_penalty)
        self.dz_limit = float(dz_limit)
        self.w_limit = float(w_limit)
        self.spawn_radius = float(spawn_radius)
        self.min_depth = float(min_depth)
        self._rng = (rng if isinstance(rng, np.random.Generator)
                     else np.random.default_rng(rng))
        self._disturbance = None
        if disturbance_sigma > 0.0:
            self._disturbance = OuProcess(
                mu=0.0, beta=disturbance_beta, sigma=disturbance_sigma,
                rng=np.random.default_rng(self._rng.integers(2 ** 63)))
        self.state: VehicleState | None = None
        self.steps_taken = 0
        self.diverged = False
        self._live = False

    # subclass hooks -------------------------------------------------------
    def _reference_depth(self, x: float) -> float:
        raise NotImplementedError

    def _deviation(self, state: VehicleState) -> tuple[float, float]:
        """(depth error, pitch error) entering the cost and the guard."""
        raise NotImplementedError

    def _observe(self) -> np.ndarray:
        raise NotImplementedError

    def _after_state_update(self) -> None:
        """Called after reset and after every step (window upkeep)."""

    # public surface ---------------------------------------------------------
    @property
    def observation_dim(self) -> int:
        raise NotImplementedError

    def z_ref_at(self, x: float) -> float:
        return self._reference_depth(x)

    def reset(self, initial: VehicleState | None = None) -> np.ndarray:
        if initial is None:
            z_ref = self._reference_depth(0.0)
            z0 = self._rng.uniform(z_ref - self.spawn_radius,
                                   z_ref + self.spawn_radius)
            initial = VehicleState(x=0.0, z=max(z0, self.min_depth),
                                   theta=0.0, w=0.0, q=0.0)
        dz, _ = self._deviation(initial)
        if abs(dz) > self.dz_limit or abs(initial.w) > self.w_limit:
            raise ValueError(
                f"initial state outside configured bounds: |dz|={abs(dz):.2f} m "
                f"(limit {self.dz_limit}), |w|={abs(initial.w):.2f} m/s "
                f"(limit {self.w_limit})")
        self.state = initial
        self.steps_taken = 0
        self.diverged = False
        self._live = True
        if self._disturbance is not None:
            self._disturbance.reset()
        self._after_state_update()
        return self._observe()

    def step(self, u: ControlInput | np.ndarray) -> tuple[np.ndarray, float, bool]:
        if not self._live:
            raise RuntimeError("environment must be reset before stepping")
        if not isinstance(u, ControlInput):
            arr = np.asarray(u, dtype=float)
            u = ControlInput(float(arr[0]), float(arr[1]))
        disturbance = (self._disturbance.step() if self._disturbance is not None
                       else np.zeros(2))
        self.state = step(self.state, u, disturbance, self.params,
                          self.u0, self.dt)
        self.steps_taken += 1
        self._after_state_update()
        dz, pitch = self._deviation(self.state)
        cost = step_cost(dz, pitch, self.state.w, self.state.q,
                         u.as_array(), self.weights)
        done = False
        if abs(dz) > self.dz_limit or abs(self.state.w) > self.w_limit:
            cost += self.divergence_penalty
            self.diverged = True
            done = True
        elif self.steps_taken >= self.horizon_steps:
            done = True
        if done:
            self._live = False
        return self._observe(), cost, done


class ConstantDepthEnv(_PlanarDepthEnv):
    """Hold a fixed target depth."""

    def __init__(self, z_ref: float = 8.0, **kwargs):
        super().__init__(**kwargs)
        self.z_ref = float(z_ref)

    @property
    def observation_dim(self) -> int:
        return 5

    def _reference_depth(self, x: float) -> float:
        return self.z_ref

    def _deviation(self, state: VehicleState) -> tuple[float, float]:
        return state.z - self.z_ref, wrap_angle(state.theta)

    def _observe(self) -> np.ndarray:
        return observe_constant(self.state, self.z_ref)


class CurvedDepthEnv(_PlanarDepthEnv):
    """Follow an analytic depth curve g(x)."""

    def __init__(self, profile: AnalyticProfile, **kwargs):
        if not isinstance(profile, (AnalyticProfile, ConstantProfile)):
            raise TypeError("curved tracking needs an analytic profile "
                            "(depth, slope, and curvature must all exist)")
        super().__init__(**kwargs)
        self.profile = profile

    @property
    def observation_dim(self) -> int:
        return 8

    def _reference_depth(self, x: float) -> float:
        return self.profile.depth(x)

    def _deviation(self, state: VehicleState) -> tuple[float, float]:
        theta_c = np.arctan(self.profile.slope(state.x))
        return (state.z - self.profile.depth(state.x),
                wrap_angle(state.theta - theta_c))

    def _observe(self) -> np.ndarray:
        return observe_curved(self.state, self.profile, self.u0)


class SeafloorEnv(_PlanarDepthEnv):
    """Hold a safe offset above the seafloor, observing a depth-history
    window. Works with any profile kind; only depth(x) is queried."""

    def __init__(self, profile, window_n: int = 3, safe_offset: float = 5.0,
                 **kwargs):
        if window_n < 1:
            raise ValueError("window_n must be at least 1")
        super().__init__(**kwargs)
        self.profile = profile
        self.window_n = int(window_n)
        self.safe_offset = float(safe_offset)
        self._window: list[float] = []

    @property
    def observation_dim(self) -> int:
        return self.window_n + 4

    def _reference_depth(self, x: float) -> float:
        return self.profile.depth(x) - self.safe_offset

    def _deviation(self, state: VehicleState) -> tuple[float, float]:
        return (state.z - self._reference_depth(state.x),
                wrap_angle(state.theta))

    def _after_state_update(self) -> None:
        dz, _ = self._deviation(self.state)
        if self.steps_taken == 0:
            # prime every slot with the first measurement: before any
            # history exists, pretending the error was ever different
            # would fabricate an approach direction
            self._window = [dz] * self.window_n
        else:
            self._window.append(dz)
            del self._window[:-self.window_n]

    def _observe(self) -> np.ndarray:
        return observe_seafloor(self.state, self.profile, self._window,
                                self.window_n, self.safe_offset)
