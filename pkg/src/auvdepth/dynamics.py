"""Planar dynamics of a REMUS-class AUV restricted to the vertical (x-z) plane.

The vehicle moves at a fixed surge speed u0 while heave and pitch respond to
propeller thrust, pitch torque, hydrodynamic loads, and hydrostatic restoring
moments. Coordinates and sign conventions:

    x      horizontal position [m], positive forward
    z      depth [m], positive DOWNWARD
    theta  pitch angle [rad], positive nose-up, kept in (-pi, pi]
    w      heave velocity [m/s], positive downward (body frame)
    q      pitch rate [rad/s]

Heave and pitch accelerations are coupled through added-mass terms, so each
step solves the 2x2 effective mass system

    [ m - Z_wdot        -(m*x_G + Z_qdot) ] [dw/dt]   [ heave load ]
    [ -(m*x_G + M_wdot)  I_yy - M_qdot    ] [dq/dt] = [ pitch load ]

with the loads collecting body lift, cross-flow drag, hydrostatics, control
inputs, and additive disturbances. Integration is explicit forward Euler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Default actuator limits: sized so the model-based baselines rarely saturate
# on a 6 m depth step, while the policy network's output scaling has a fixed
# symmetric range to map onto.
TAU1_MAX = 20.0  # [N] heave thrust limit
TAU2_MAX = 10.0  # [N*m] pitch torque limit


@dataclass(frozen=True)
class HydroParams:
    """Hydrodynamic and hydrostatic parameters of the planar vehicle.

    Coefficient naming follows the SNAME convention: Z_* are heave-force
    coefficients, M_* are pitch-moment coefficients; the *dot suffix marks
    added-mass terms multiplying accelerations. Z_wq is carried for
    completeness of the coefficient set but the planar force balance used
    here has no w*q heave term, so it never enters the equations of motion.
    """

    m: float = 30.51        # vehicle mass [kg]
    I_yy: float = 3.45      # pitch inertia [kg*m^2]
    Z_qdot: float = -1.93   # added mass, heave force per pitch accel [kg*m]
    Z_wdot: float = -35.5   # added mass, heave force per heave accel [kg]
    M_qdot: float = -4.88   # added mass, pitch moment per pitch accel [kg*m^2]
    M_wdot: float = -1.93   # added mass, pitch moment per heave accel [kg*m]
    Z_uq: float = -5.22     # body lift: heave force per u*q [kg/rad]
    Z_uw: float = -28.6     # body lift: heave force per u*w [kg/m]
    M_uq: float = -2.0      # body lift: pitch moment per u*q [kg*m/rad]
    M_uw: float = 24.0      # body lift: pitch moment per u*w [kg]
    Z_ww: float = -131.0    # cross-flow drag, heave [kg/m]
    Z_qq: float = -0.632    # cross-flow drag, heave per q|q| [kg*m/rad^2]
    M_ww: float = 3.18      # cross-flow drag, pitch [kg]
    M_qq: float = -188.0    # cross-flow drag, pitch per q|q| [kg*m^2/rad^2]
    Z_wq: float = -5.22     # unused by the planar force balance (see docstring)
    W: float = 299.0        # weight [N]
    B: float = 299.0        # buoyancy [N] (defaults to neutral: W == B)
    x_G: float = 0.0        # longitudinal center of gravity offset [m]
    z_G: float = 0.02       # vertical center of gravity offset [m]
    x_B: float = 0.0        # longitudinal center of buoyancy offset [m]
    z_B: float = 0.0        # vertical center of buoyancy offset [m]

    def __post_init__(self) -> None:
        if not self.m > 0.0:
            raise ValueError(f"mass must be positive, got m={self.m}")
        if not self.I_yy > 0.0:
            raise ValueError(f"pitch inertia must be positive, got I_yy={self.I_yy}")
        a, b, c, d = self.mass_matrix_entries()
        det = a * d - b * c
        scale = max(abs(a), abs(b), abs(c), abs(d), 1.0)
        if abs(det) < 1e-12 * scale * scale:
            raise ValueError("effective mass matrix is singular")

    def mass_matrix_entries(self) -> tuple[float, float, float, float]:
        """Row-major entries (a, b, c, d) of the 2x2 effective mass matrix."""
        a = self.m - self.Z_wdot
        b = -(self.m * self.x_G + self.Z_qdot)
        c = -(self.m * self.x_G + self.M_wdot)
        d = self.I_yy - self.M_qdot
        return a, b, c, d


@dataclass(frozen=True)
class VehicleState:
    """Planar kinematic/dynamic state. All components must be finite."""

    x: float = 0.0      # horizontal position [m]
    z: float = 0.0      # depth [m], positive down
    theta: float = 0.0  # pitch angle [rad], in (-pi, pi]
    w: float = 0.0      # heave velocity [m/s]
    q: float = 0.0      # pitch rate [rad/s]

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.z, self.theta, self.w, self.q])


@dataclass(frozen=True)
class ControlInput:
    """Actuator command (heave thrust, pitch torque), saturated on construction.

    Saturation is idempotent: re-wrapping an already saturated command with the
    same bounds leaves it unchanged.
    """

    tau1: float = 0.0           # heave thrust [N]
    tau2: float = 0.0           # pitch torque [N*m]
    tau1_max: float = TAU1_MAX  # symmetric thrust bound [N]
    tau2_max: float = TAU2_MAX  # symmetric torque bound [N*m]

    def __post_init__(self) -> None:
        if self.tau1_max < 0.0 or self.tau2_max < 0.0:
            raise ValueError("control bounds must be nonnegative")
        object.__setattr__(self, "tau1", min(max(self.tau1, -self.tau1_max), self.tau1_max))
        object.__setattr__(self, "tau2", min(max(self.tau2, -self.tau2_max), self.tau2_max))

    def as_array(self) -> np.ndarray:
        return np.array([self.tau1, self.tau2])


def wrap_angle(theta: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi]."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    wrapped -= math.pi
    if wrapped <= -math.pi:
        wrapped = math.pi
    return wrapped


def _motion_loads(
    p: HydroParams,
    u0: float,
    w: float,
    q: float,
    theta: float,
    tau1: float,
    tau2: float,
) -> tuple[float, float]:
    """Right-hand sides of the coupled heave/pitch balance.

    Everything except the acceleration terms, which live on the left in the
    effective mass matrix.
    """
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    heave = (
        p.m * (u0 * q + p.z_G * q * q)
        + p.Z_uq * u0 * q
        + p.Z_uw * u0 * w
        + p.Z_ww * w * abs(w)
        + p.Z_qq * q * abs(q)
        + (p.W - p.B) * cos_t
        + tau1
    )
    pitch = (
        -p.m * (p.x_G * u0 * q + p.z_G * w * q)
        + p.M_uq * u0 * q
        + p.M_uw * u0 * w
        + p.M_ww * w * abs(w)
        + p.M_qq * q * abs(q)
        - (p.x_G * p.W - p.x_B * p.B) * cos_t
        - (p.z_G * p.W - p.z_B * p.B) * sin_t
        + tau2
    )
    return heave, pitch


def derivatives(
    state: VehicleState,
    u: ControlInput,
    disturbance: np.ndarray,
    params: HydroParams,
    u0: float,
) -> np.ndarray:
    """Time derivatives (dx, dz, dtheta, dw, dq) of the planar state.

    `disturbance` is a 2-vector of additive loads on the control channels
    (thrust [N], torque [N*m]). Raises ValueError on a non-finite state.
    """
    for name in ("x", "z", "theta", "w", "q"):
        if not math.isfinite(getattr(state, name)):
            raise ValueError(f"non-finite state component {name}={getattr(state, name)}")

    tau1 = u.tau1 + float(disturbance[0])
    tau2 = u.tau2 + float(disturbance[1])
    heave, pitch = _motion_loads(params, u0, state.w, state.q, state.theta, tau1, tau2)

    a, b, c, d = params.mass_matrix_entries()
    det = a * d - b * c
    dw = (d * heave - b * pitch) / det
    dq = (a * pitch - c * heave) / det

    cos_t = math.cos(state.theta)
    sin_t = math.sin(state.theta)
    dx = u0 * cos_t + state.w * sin_t
    dz = state.w * cos_t - u0 * sin_t
    dtheta = state.q
    return np.array([dx, dz, dtheta, dw, dq])


def step(
    state: VehicleState,
    u: ControlInput,
    disturbance: np.ndarray,
    params: HydroParams,
    u0: float,
    dt: float,
) -> VehicleState:
    """One forward-Euler step of length dt; theta re-normalized to (-pi, pi]."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    deriv = derivatives(state, u, disturbance, params, u0)
    new = (
        state.x + dt * deriv[0],
        state.z + dt * deriv[1],
        state.theta + dt * deriv[2],
        state.w + dt * deriv[3],
        state.q + dt * deriv[4],
    )
    for name, value in zip(("x", "z", "theta", "w", "q"), new):
        if not math.isfinite(value):
            raise ValueError(f"state component {name} became non-finite: {value}")
    return VehicleState(x=new[0], z=new[1], theta=wrap_angle(new[2]), w=new[3], q=new[4])


def linearize_motion(
    params: HydroParams,
    u0: float,
    w: float,
    q: float,
    theta: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-time Jacobians of the motion subsystem [w, q, z, theta].

    Returns (A, B) with A 4x4 and B 4x2 such that d/dt [w,q,z,theta] =
    A*[w,q,z,theta] + B*[tau1,tau2] to first order around the given point.
    Depth z never feeds back into the dynamics, so its column is zero.
    The w|w| and q|q| drag terms have derivative 2|w| and 2|q|, continuous
    through zero.
    """
    p = params
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)

    # Partials of the heave/pitch loads with respect to (w, q, theta).
    dh_dw = p.Z_uw * u0 + 2.0 * p.Z_ww * abs(w)
    dh_dq = p.m * (u0 + 2.0 * p.z_G * q) + p.Z_uq * u0 + 2.0 * p.Z_qq * abs(q)
    dh_dt = -(p.W - p.B) * sin_t
    dp_dw = -p.m * p.z_G * q + p.M_uw * u0 + 2.0 * p.M_ww * abs(w)
    dp_dq = -p.m * (p.x_G * u0 + p.z_G * w) + p.M_uq * u0 + 2.0 * p.M_qq * abs(q)
    dp_dt = (p.x_G * p.W - p.x_B * p.B) * sin_t - (p.z_G * p.W - p.z_B * p.B) * cos_t

    a, b, c, d = p.mass_matrix_entries()
    det = a * d - b * c
    minv = np.array([[d, -b], [-c, a]]) / det

    loads = np.array([
        [dh_dw, dh_dq, 0.0, dh_dt],
        [dp_dw, dp_dq, 0.0, dp_dt],
    ])
    accel = minv @ loads

    a_mat = np.zeros((4, 4))
    a_mat[0:2, :] = accel
    a_mat[2, 0] = cos_t                      # dz/dt = w cos(theta) - u0 sin(theta)
    a_mat[2, 3] = -w * sin_t - u0 * cos_t
    a_mat[3, 1] = 1.0                        # dtheta/dt = q

    b_mat = np.zeros((4, 2))
    b_mat[0:2, :] = minv
    return a_mat, b_mat


class OuProcess:
    """Mean-reverting correlated noise on two channels.

    Discrete update per step:

        xi <- xi + beta * (mu - xi) + sigma * eps      (carry_state=True)
        xi <- beta * (mu - xi) + sigma * eps           (carry_state=False)

    with eps standard normal per component. The default form carries the
    current value and is mean-reverting around it; the alternative drops the
    carry term and is kept only as a configurable variant.
    """

    def __init__(
        self,
        mu: float,
        beta: float,
        sigma: float,
        rng: np.random.Generator,
        carry_state: bool = True,
    ) -> None:
        if not 0.0 < beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
        if sigma < 0.0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        self.mu = float(mu)
        self.beta = float(beta)
        self.sigma = float(sigma)
        self.carry_state = carry_state
        self.rng = rng
        self.state = np.full(2, self.mu)

    def reset(self) -> None:
        self.state = np.full(2, self.mu)

    def step(self) -> np.ndarray:
        """Advance one step and return a copy of the new disturbance vector."""
        eps = self.rng.standard_normal(2)
        drift = self.beta * (self.mu - self.state)
        if self.carry_state:
            self.state = self.state + drift + self.sigma * eps
        else:
            self.state = drift + self.sigma * eps
        return self.state.copy()

    def stationary_std(self) -> float:
        """Analytic long-run standard deviation of the carried form."""
        rho = 1.0 - self.beta
        return self.sigma / math.sqrt(1.0 - rho * rho)
