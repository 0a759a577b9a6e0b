"""
Radial Loewner Evolution - Driving functions, chains, traces and the Green's observable.

The driving function is held constant on each step [t_k, t_k + dt). On such a
step the radial Loewner flow has the closed form

    k(g_{t+dt}(z) / xi) = e^{dt} k(z / xi),    k(u) = u / (1 + u)^2,

so the chain is a composition of exact slit maps. ``k`` maps the disk onto the
plane slit along [1/4, inf); its inverse on that slit plane is
k^{-1}(w) = 2w / ((1 - 2w) + sqrt(1 - 4w)) with the principal square root.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Tuple, Union

import numpy as np

from .config import get_settings
from .curve import Curve
from .errors import PreconditionViolation, SingularAtOrigin, StepTooLarge
from .green import SleParams
from .rng import RngStream

logger = logging.getLogger(__name__)

EULER_LOCAL_ERROR = 1e-8
_EULER_MAX_HALVINGS = 30
_BACKWARD_SUBSTEP_FRACTION = 0.05
_BACKWARD_MAX_SUBSTEPS = 10_000


@dataclass(frozen=True, eq=False)
class DrivingFunction:
    """xi(t_k) = exp(i angle_k) on the grid t_k = k dt, k = 0..N."""

    angles: np.ndarray
    dt: float
    kappa: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        angles = np.asarray(self.angles, dtype=float).ravel()
        if len(angles) < 1:
            raise ValueError("a driving function needs at least one sample")
        angles.flags.writeable = False
        object.__setattr__(self, 'angles', angles)

    @classmethod
    def sample(cls, kappa: float, T: float, dt: float, rng: Union[RngStream, np.random.Generator],
               uniform_start: bool = False) -> "DrivingFunction":
        """
        xi(t) = exp(i (theta_0 + B(kappa t))) sampled at spacing dt.

        Args:
            kappa: Brownian variance rate (> 0)
            T: Horizon
            dt: Step
            rng: Random stream
            uniform_start: Draw theta_0 uniformly instead of 0

        Returns:
            DrivingFunction with N = round(T/dt) steps
        """
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        steps = int(round(T / dt))
        gen = rng.generator() if isinstance(rng, RngStream) else rng
        theta0 = gen.uniform(0.0, 2 * np.pi) if uniform_start else 0.0
        increments = gen.normal(0.0, np.sqrt(kappa * dt), size=steps)
        angles = theta0 + np.concatenate([[0.0], np.cumsum(increments)])
        seed = rng.seed if isinstance(rng, RngStream) else None
        return cls(angles, dt, kappa, seed)

    @classmethod
    def constant(cls, T: float, dt: float, angle: float = 0.0) -> "DrivingFunction":
        steps = int(round(T / dt))
        return cls(np.full(steps + 1, angle), dt, 0.0)

    @property
    def steps(self) -> int:
        return len(self.angles) - 1

    @property
    def horizon(self) -> float:
        return self.steps * self.dt

    @property
    def samples(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.angles)) * self.dt

    def increments(self) -> np.ndarray:
        return np.diff(self.angles)

    def shifted(self, start_step: int) -> "DrivingFunction":
        """The driving function restarted at t = start_step * dt."""
        if not 0 <= start_step <= self.steps:
            raise ValueError("shift outside the driving horizon")
        return DrivingFunction(self.angles[start_step:], self.dt, self.kappa, self.seed)

    def truncated(self, steps: int) -> "DrivingFunction":
        return DrivingFunction(self.angles[:steps + 1], self.dt, self.kappa, self.seed)


def _koebe(u: np.ndarray) -> np.ndarray:
    return u / (1 + u) ** 2


def _koebe_inverse(w: np.ndarray) -> np.ndarray:
    return 2 * w / ((1 - 2 * w) + np.sqrt(1 - 4 * w))


def _koebe_derivative(u: np.ndarray) -> np.ndarray:
    return (1 - u) / (1 + u) ** 3


def slit_step(z: np.ndarray, xi: complex, dt: float,
              tolerance: float = 1e-6) -> Tuple[np.ndarray, np.ndarray]:
    """
    One exact radial slit map (dt > 0) or its inverse (dt < 0) with driving xi.

    Returns:
        (images, hit) where hit marks points that reached the slit or came
        within tolerance of xi; their image is set to xi
    """
    u = np.asarray(z, dtype=complex) / xi
    w = np.exp(dt) * _koebe(u)
    on_slit = (np.abs(w.imag) <= tolerance * np.maximum(np.abs(w), 1.0)) & (w.real >= 0.25 - tolerance)
    with np.errstate(divide='ignore', invalid='ignore'):
        v = _koebe_inverse(w)
    v = np.where(u == 0, 0, v)
    out = xi * v
    hit = (on_slit | (np.abs(xi - out) < tolerance) | ~np.isfinite(out)) if dt > 0 else np.zeros(u.shape, bool)
    out = np.where(hit, xi, out)
    return out, hit


def slit_step_derivative(z: np.ndarray, image: np.ndarray, xi: complex, dt: float) -> np.ndarray:
    """Chain-rule derivative of one slit step: e^{dt} k'(z/xi) / k'(g/xi)."""
    return np.exp(dt) * _koebe_derivative(z / xi) / _koebe_derivative(image / xi)


def _velocity(g: complex, xi: complex) -> complex:
    return g * (xi + g) / (xi - g)


def _euler_step(g: complex, xi: complex, dt: float) -> complex:
    """Step-doubling Euler across one driving step."""
    t = 0.0
    h = dt
    halvings = 0
    while t < dt - 1e-15:
        h = min(h, dt - t)
        one = g + h * _velocity(g, xi)
        half = g + (h / 2) * _velocity(g, xi)
        two = half + (h / 2) * _velocity(half, xi)
        if abs(two - one) <= EULER_LOCAL_ERROR:
            g = 2 * two - one
            t += h
            h *= 2
            halvings = max(halvings - 1, 0)
            continue
        h /= 2
        halvings += 1
        if halvings > _EULER_MAX_HALVINGS:
            raise StepTooLarge(f"Euler controller cannot reach local error {EULER_LOCAL_ERROR:g}")
    return g


@dataclass(frozen=True)
class RadialTrajectory:
    """g_t(z) on the driving grid, truncated at blow-up."""

    times: np.ndarray
    values: np.ndarray
    blowup_time: Optional[float]


def solve_radial(driving: DrivingFunction, z: complex, scheme: Literal['slit', 'euler'] = 'slit',
                 blowup_tolerance: Optional[float] = None) -> RadialTrajectory:
    """
    Solve the radial Loewner equation dg/dt = g (xi + g) / (xi - g) from g_0 = z.

    Args:
        driving: Driving function (piecewise constant per step)
        z: Starting point, |z| < 1
        scheme: 'slit' for exact slit maps, 'euler' for step-doubling Euler
        blowup_tolerance: Hull membership threshold on |xi - g_t(z)|

    Returns:
        Trajectory whose last time is the blow-up time when the point was swallowed

    Raises:
        StepTooLarge: If the Euler controller cannot meet its local error target
    """
    if abs(z) >= 1:
        raise PreconditionViolation("solve_radial needs |z| < 1")
    tol = blowup_tolerance if blowup_tolerance is not None else get_settings().blowup_tolerance
    xis = driving.samples
    values = np.empty(driving.steps + 1, dtype=complex)
    values[0] = z
    g = complex(z)
    for k in range(driving.steps):
        if scheme == 'slit':
            out, hit = slit_step(np.array([g]), xis[k], driving.dt, tol)
            g, swallowed = complex(out[0]), bool(hit[0])
        elif scheme == 'euler':
            g = _euler_step(g, xis[k], driving.dt)
            swallowed = abs(xis[k] - g) < tol
        else:
            raise ValueError(f"unknown scheme: {scheme}")
        values[k + 1] = g
        if swallowed:
            logger.debug(f"point {z} swallowed at step {k + 1}")
            return RadialTrajectory(driving.times[:k + 2], values[:k + 2], (k + 1) * driving.dt)
    return RadialTrajectory(driving.times, values, None)


@dataclass(frozen=True, eq=False)
class LoewnerChain:
    """
    The maps g_{t_k} of a driving function, as compositions of slit steps.

    ``hull`` collects the tracked points that were swallowed, with their blow-up step.
    """

    driving: DrivingFunction
    blowup_tolerance: float = field(default_factory=lambda: get_settings().blowup_tolerance)

    @property
    def dt(self) -> float:
        return self.driving.dt

    def flow(self, z: np.ndarray, steps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """
        Images g_{t_k}(z) for every k, for an array of points.

        Returns:
            (values (len(z), steps+1), blowup_step per point; -1 if never swallowed)
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        steps = self.driving.steps if steps is None else steps
        xis = self.driving.samples
        values = np.empty((len(z), steps + 1), dtype=complex)
        values[:, 0] = z
        blowup = np.full(len(z), -1, dtype=np.int64)
        g = z.copy()
        for k in range(steps):
            alive = blowup < 0
            out, hit = slit_step(g[alive], xis[k], self.dt, self.blowup_tolerance)
            g[alive] = out
            idx = np.nonzero(alive)[0][hit]
            blowup[idx] = k + 1
            values[:, k + 1] = g
        return values, blowup

    def map(self, z: np.ndarray, step: int) -> np.ndarray:
        """g_{t_step}(z)."""
        g = np.atleast_1d(np.asarray(z, dtype=complex)).copy()
        xis = self.driving.samples
        for k in range(step):
            g, _ = slit_step(g, xis[k], self.dt, self.blowup_tolerance)
        return g

    def hull(self, z: np.ndarray, step: Optional[int] = None) -> np.ndarray:
        """Points of z swallowed by time t_step."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        _, blowup = self.flow(z, step)
        return z[blowup >= 0]

    def derivative(self, z: complex, step: int, method: Literal['centered', 'chain'] = 'centered',
                   h: float = 1e-5) -> complex:
        """g'_{t_step}(z) by centered differences or by the chain rule over slit steps."""
        if method == 'centered':
            g = self.map(np.array([z - h, z + h]), step)
            return complex((g[1] - g[0]) / (2 * h))
        xis = self.driving.samples
        g = np.array([z], dtype=complex)
        dg = 1.0 + 0j
        for k in range(step):
            image, _ = slit_step(g, xis[k], self.dt, self.blowup_tolerance)
            dg *= complex(slit_step_derivative(g, image, xis[k], self.dt)[0])
            g = image
        return dg

    def inverse(self, w: np.ndarray, step: int) -> np.ndarray:
        """g_{t_step}^{-1}(w) by composing inverse slit steps."""
        f = np.atleast_1d(np.asarray(w, dtype=complex)).copy()
        xis = self.driving.samples
        for k in range(step - 1, -1, -1):
            f, _ = slit_step(f, xis[k], -self.dt, self.blowup_tolerance)
        return f

    def inverse_by_flow(self, w: complex, step: int) -> complex:
        """g_{t_step}^{-1}(w) by integrating the backward Loewner flow (adaptive RK4)."""
        xis = self.driving.samples
        h = complex(w)
        for k in range(step - 1, -1, -1):
            xi = xis[k]
            speed = abs(_velocity(h, xi))
            gap = max(abs(xi - h), 1e-12)
            sub = int(min(_BACKWARD_MAX_SUBSTEPS,
                          max(4, np.ceil(self.dt * speed / (_BACKWARD_SUBSTEP_FRACTION * gap)))))
            s = self.dt / sub
            for _ in range(sub):
                k1 = -_velocity(h, xi)
                k2 = -_velocity(h + s / 2 * k1, xi)
                k3 = -_velocity(h + s / 2 * k2, xi)
                k4 = -_velocity(h + s * k3, xi)
                h = h + s / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        return h


@dataclass(frozen=True, eq=False)
class TraceApprox:
    """An approximate SLE trace and how it was obtained."""

    curve: Curve
    parametrization: Literal['capacity', 'finite-lifetime']
    capacity_times: np.ndarray
    offset: float
    inverse_discrepancy: Optional[float] = None

    @property
    def flagged(self) -> bool:
        """True when the two inverse constructions disagreed beyond tolerance."""
        if self.inverse_discrepancy is None:
            return False
        return self.inverse_discrepancy > get_settings().inverse_agreement


def trace_points(chain: LoewnerChain, offset: float) -> np.ndarray:
    """
    gamma(t_{k+1}) ~ g_{t_{k+1}}^{-1}((1 - offset) xi_k), plus gamma(0) = xi_0.

    All tips are pulled back together: inverse step j is applied to every tip
    created after t_j.
    """
    xis = chain.driving.samples
    n = chain.driving.steps
    w = (1 - offset) * xis[:n].copy()
    for j in range(n - 1, -1, -1):
        w[j:], _ = slit_step(w[j:], xis[j], -chain.dt)
    return np.concatenate([[xis[0]], w])


def sample_sle_trace(kappa: float, T: float, dt: float, rng: Union[RngStream, np.random.Generator],
                     parametrization: Literal['capacity', 'finite-lifetime'] = 'finite-lifetime',
                     uniform_start: bool = False, offset: Optional[float] = None,
                     check_inverse: bool = False, check_points: int = 8) -> TraceApprox:
    """
    Approximate radial SLE(kappa) trace from a sampled driving function.

    Args:
        kappa: SLE parameter (> 0)
        T: Capacity horizon
        dt: Driving step
        rng: Random stream
        parametrization: 'capacity' (times t_k) or 'finite-lifetime'
            (s = t/(1+t), origin appended at s = 1)
        uniform_start: Start at a uniform boundary point
        offset: Trace radius offset, r = 1 - offset
        check_inverse: Recompute a few tips by backward flow and record the discrepancy
        check_points: How many tips to recompute

    Returns:
        TraceApprox
    """
    settings = get_settings()
    offset = settings.trace_offset if offset is None else offset
    driving = DrivingFunction.sample(kappa, T, dt, rng, uniform_start=uniform_start)
    chain = LoewnerChain(driving)
    points = trace_points(chain, offset)
    cap_times = driving.times

    discrepancy = None
    if check_inverse and driving.steps > 0:
        picks = np.unique(np.linspace(1, driving.steps, min(check_points, driving.steps)).astype(int))
        xis = driving.samples
        diffs = [abs(chain.inverse_by_flow((1 - offset) * xis[k - 1], k) - points[k]) for k in picks]
        discrepancy = float(max(diffs))
        if discrepancy > settings.inverse_agreement:
            logger.warning(f"inverse slit and backward flow disagree by {discrepancy:.3g}")

    if parametrization == 'finite-lifetime':
        times = np.concatenate([cap_times / (1 + cap_times), [1.0]])
        points = np.concatenate([points, [0j]])
    else:
        times = cap_times
    return TraceApprox(Curve(points, times), parametrization, cap_times, offset, discrepancy)


@dataclass(frozen=True)
class MartingaleSeries:
    """M_t(z) on the driving grid, stopped at blow-up."""

    times: np.ndarray
    values: np.ndarray
    blowup_time: Optional[float]


def martingale_observable(chain: LoewnerChain, z: complex, params: SleParams,
                          h: float = 1e-5) -> MartingaleSeries:
    """
    M_t(z) = |g_t'(z)|^(2-d) G_D(g_t(z)) along the chain.

    g_t' comes from centered differences with step h; the series is truncated
    before the first step at which any of the three tracked points is swallowed.

    Raises:
        SingularAtOrigin: If z = 0
    """
    if z == 0:
        raise SingularAtOrigin("the observable is singular at the origin")
    if abs(z) >= 1:
        raise PreconditionViolation("martingale_observable needs |z| < 1")
    d = params.dimension
    values, blowup = chain.flow(np.array([z - h, z, z + h]))
    derivative = (values[2] - values[0]) / (2 * h)
    series = np.abs(derivative) ** (2 - d) * np.abs(values[1]) ** (d - 2)
    series[0] = abs(z) ** (d - 2)
    hit = blowup[blowup >= 0]
    if len(hit):
        stop = int(hit.min())
        return MartingaleSeries(chain.driving.times[:stop], series[:stop], stop * chain.dt)
    return MartingaleSeries(chain.driving.times, series, None)
