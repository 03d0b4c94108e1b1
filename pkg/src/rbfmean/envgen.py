"""Synthetic benchmark generation: plants, scripted controllers, anomaly injectors.

Two plants produce observation streams: a classic cartpole balanced by a PD
law (explicit Euler at 0.02 s), and a stable linear-Gaussian plant under
static feedback. Anomalies are injected from a fixed onset onward:

  * arno  - autoregressive noise added to the observed state after the
            transition (sensor-style corruption; the controller sees it too);
  * arns  - autoregressive noise added to the state and action entering the
            transition (dynamics-style corruption);
  * action_factor / action_noise / action_offset / body_mass_factor /
    force_vector - time-independent semantic changes.

Episode generation is a pure function of (plant, controller, length, seed,
spec): the anomalous run and the clean run with the same seed agree exactly
before the onset, because anomaly-specific draws come from separate streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.signal import lfilter

from .core import EpisodeMatrix
from .errors import ConfigError, ShapeError
from .rng import rng_from

# rng stream tags under an episode seed
_MAIN = 0          # initial state + process noise
_NOISE_ROWS = 1    # AR noise-matrix rows
_SEMANTIC = 2      # action-noise draws

AR_KINDS = ("arno", "arns")
SEMANTIC_KINDS = ("action_factor", "action_noise", "action_offset", "body_mass_factor", "force_vector")
ANOMALY_KINDS = AR_KINDS + SEMANTIC_KINDS

# innovation-std multipliers relative to the clean episode's per-dimension std
LEVEL_MULTS = {"light": 0.25, "medium": 1.0, "strong": 2.0}

DEFAULT_AR_COEFS = {1: (0.8,), 2: (0.5, 0.3)}


@dataclass(frozen=True)
class ArProcess:
    """Stationary AR(1) or AR(2) driven by i.i.d. Gaussian innovations."""

    order: int
    coefs: tuple[float, ...]
    noise_std: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.order not in (1, 2):
            raise ConfigError(f"AR order must be 1 or 2, got {self.order}")
        coefs = tuple(float(c) for c in self.coefs)
        if len(coefs) != self.order:
            raise ConfigError(f"AR({self.order}) needs {self.order} coefficients, got {len(coefs)}")
        if self.order == 1:
            if not abs(coefs[0]) < 1:
                raise ConfigError(f"AR(1) needs |phi1| < 1, got {coefs[0]}")
        else:
            p1, p2 = coefs
            if not (abs(p2) < 1 and p1 + p2 < 1 and p2 - p1 < 1):
                raise ConfigError(f"AR(2) coefficients {coefs} violate the stationarity triangle")
        if self.noise_std < 0 or not np.isfinite(self.noise_std):
            raise ConfigError(f"noise_std must be finite and >= 0, got {self.noise_std}")
        object.__setattr__(self, "coefs", coefs)


def _ar_filter(coefs: Sequence[float], innovations: np.ndarray) -> np.ndarray:
    # z_t = sum_i phi_i z_{t-i} + eps_t with zero initial history
    denom = np.concatenate(([1.0], -np.asarray(coefs, dtype=np.float64)))
    return lfilter([1.0], denom, innovations)


def ar_sample(proc: ArProcess, length: int) -> np.ndarray:
    """One AR realization of the given length, deterministic per proc.seed."""
    if length < 1:
        raise ConfigError(f"length must be >= 1, got {length}")
    rng = rng_from(proc.seed)
    innovations = proc.noise_std * rng.standard_normal(length)
    return _ar_filter(proc.coefs, innovations)


def noise_matrix(proc: ArProcess, n_rows: int, length: int, seed: int) -> np.ndarray:
    """Independent AR rows; row n draws from a stream derived from (seed, n)."""
    if n_rows < 1:
        raise ConfigError(f"n_rows must be >= 1, got {n_rows}")
    out = np.empty((n_rows, length))
    for n in range(n_rows):
        rng = rng_from(seed, _NOISE_ROWS, n)
        out[n] = _ar_filter(proc.coefs, proc.noise_std * rng.standard_normal(length))
    return out


# ---------------------------------------------------------------------------
# Plants and controllers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CartpolePlant:
    """Inverted pendulum on a cart, explicit Euler, state [x, x_dot, theta, theta_dot].

    Episodes run a fixed length: instead of terminating outside the usual
    position/angle limits the state saturates there (clamped, never NaN).
    """

    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    gravity: float = 9.8
    dt: float = 0.02
    x_limit: float = 2.4
    theta_limit: float = 0.21
    velocity_limit: float = 10.0
    init_scale: float = 0.05

    n_dims: int = field(default=4, init=False)
    action_dim: int = field(default=1, init=False)
    supports_mass_factor: bool = field(default=True, init=False)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-self.init_scale, self.init_scale, size=4)

    def step(
        self,
        state: np.ndarray,
        action: np.ndarray,
        rng: np.random.Generator,
        mass_factor: float = 1.0,
        extra_force: np.ndarray | float = 0.0,
    ) -> np.ndarray:
        x, x_dot, theta, theta_dot = state
        force = float(action[0]) + float(np.asarray(extra_force).reshape(-1)[0] if np.ndim(extra_force) else extra_force)
        m_cart = self.cart_mass * mass_factor
        m_pole = self.pole_mass * mass_factor
        total_mass = m_cart + m_pole
        pole_ml = m_pole * self.half_length

        sin_t, cos_t = np.sin(theta), np.cos(theta)
        temp = (force + pole_ml * theta_dot**2 * sin_t) / total_mass
        theta_acc = (self.gravity * sin_t - cos_t * temp) / (
            self.half_length * (4.0 / 3.0 - m_pole * cos_t**2 / total_mass)
        )
        x_acc = temp - pole_ml * theta_acc * cos_t / total_mass

        x = x + self.dt * x_dot
        x_dot = x_dot + self.dt * x_acc
        theta = theta + self.dt * theta_dot
        theta_dot = theta_dot + self.dt * theta_acc

        v = self.velocity_limit
        return np.array(
            [
                np.clip(x, -self.x_limit, self.x_limit),
                np.clip(x_dot, -v, v),
                np.clip(theta, -self.theta_limit, self.theta_limit),
                np.clip(theta_dot, -v, v),
            ]
        )


@dataclass(frozen=True)
class LinearPlant:
    """x_{t+1} = A x_t + B u_t + process noise, with spectral radius of A < 1."""

    a_matrix: np.ndarray
    b_matrix: np.ndarray
    process_noise_std: float = 0.05
    init_std: float = 0.5

    supports_mass_factor: bool = field(default=False, init=False)

    def __post_init__(self) -> None:
        a = np.asarray(self.a_matrix, dtype=np.float64)
        b = np.asarray(self.b_matrix, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"A must be square, got shape {a.shape}")
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise ShapeError(f"B must be {a.shape[0]} x m, got shape {b.shape}")
        radius = float(np.max(np.abs(np.linalg.eigvals(a))))
        if radius >= 1.0:
            raise ConfigError(f"A must have spectral radius < 1, got {radius:.4f}")
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_matrix", b)

    @property
    def n_dims(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def action_dim(self) -> int:
        return self.b_matrix.shape[1]

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(0.0, self.init_std, size=self.n_dims)

    def step(
        self,
        state: np.ndarray,
        action: np.ndarray,
        rng: np.random.Generator,
        mass_factor: float = 1.0,
        extra_force: np.ndarray | float = 0.0,
    ) -> np.ndarray:
        if mass_factor != 1.0:
            raise ConfigError("linear plant has no mass to scale")
        noise = rng.normal(0.0, self.process_noise_std, size=self.n_dims)
        return self.a_matrix @ state + self.b_matrix @ action + noise + extra_force


@dataclass(frozen=True)
class PDController:
    """Cartpole balance law: force = gains . [x, x_dot, theta, theta_dot] + dither.

    The dither plays the role of a stochastic policy's exploration noise and
    keeps the closed-loop state persistently excited instead of decaying to a
    fixed point.
    """

    gains: tuple[float, float, float, float] = (1.0, 2.0, 40.0, 8.0)
    dither_std: float = 0.5

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        force = float(np.dot(self.gains, obs))
        if self.dither_std > 0:
            force += float(rng.normal(0.0, self.dither_std))
        return np.array([force])


@dataclass(frozen=True)
class LinearFeedbackController:
    """u = -K x with K chosen so the closed loop stays stable."""

    k_matrix: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "k_matrix", np.atleast_2d(np.asarray(self.k_matrix, dtype=np.float64)))

    def act(self, obs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return -(self.k_matrix @ obs)


def default_linear_benchmark(
    n_dims: int = 4,
    diag: float = 0.75,
    shift: float = 0.1,
    feedback_gain: float = 0.2,
    process_noise_std: float = 0.05,
    init_std: float = 0.5,
) -> tuple[LinearPlant, LinearFeedbackController]:
    """Stable shift-coupled plant with scalar-action feedback; closed loop verified."""
    a = diag * np.eye(n_dims) + shift * np.eye(n_dims, k=1)
    if n_dims > 1:
        a[-1, 0] = shift
    b = np.ones((n_dims, 1)) / n_dims
    k = feedback_gain * np.ones((1, n_dims))
    radius = float(np.max(np.abs(np.linalg.eigvals(a - b @ k))))
    if radius >= 1.0:
        raise ConfigError(f"closed loop unstable (spectral radius {radius:.4f})")
    plant = LinearPlant(a_matrix=a, b_matrix=b, process_noise_std=process_noise_std, init_std=init_std)
    return plant, LinearFeedbackController(k_matrix=k)


# ---------------------------------------------------------------------------
# Anomaly specification and injectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnomalySpec:
    """What to inject, how hard, and from when.

    params by kind:
      arno/arns        {"order": 1|2, "coefs": [...], "level_mult": float}
      action_factor    {"factor": f > 0}
      action_noise     {"std": nu >= 0}
      action_offset    {"offset": scalar or action-length vector}
      body_mass_factor {"factor": m > 0}
      force_vector     {"force": scalar or state-length vector}
    """

    kind: str
    level: str
    params: Mapping[str, Any]
    onset: int

    def __post_init__(self) -> None:
        if self.kind not in ANOMALY_KINDS:
            raise ConfigError(f"unknown anomaly kind {self.kind!r}, expected one of {ANOMALY_KINDS}")
        if self.onset < 1:
            raise ConfigError(f"onset must be >= 1, got {self.onset}")
        params = dict(self.params)
        if self.kind in AR_KINDS:
            order = int(params.get("order", 1))
            coefs = tuple(params.get("coefs", DEFAULT_AR_COEFS[order]))
            mult = float(params.get("level_mult", LEVEL_MULTS.get(self.level, 1.0)))
            if mult <= 0:
                raise ConfigError(f"level_mult must be > 0, got {mult}")
            ArProcess(order=order, coefs=coefs, noise_std=1.0)  # stationarity check
            params.update(order=order, coefs=coefs, level_mult=mult)
        elif self.kind in ("action_factor", "body_mass_factor"):
            if float(params.get("factor", 0.0)) <= 0:
                raise ConfigError(f"{self.kind} needs a positive 'factor'")
        elif self.kind == "action_noise":
            if float(params.get("std", -1.0)) < 0:
                raise ConfigError("action_noise needs 'std' >= 0")
        elif self.kind == "action_offset":
            if "offset" not in params:
                raise ConfigError("action_offset needs 'offset'")
        elif self.kind == "force_vector":
            if "force" not in params:
                raise ConfigError("force_vector needs 'force'")
        object.__setattr__(self, "params", params)


def validate_spec_for_plant(spec: AnomalySpec, plant: Any) -> None:
    if spec.kind == "body_mass_factor" and not plant.supports_mass_factor:
        raise ConfigError(f"body_mass_factor is not applicable to {type(plant).__name__}")


def inject_arno(state_observed: np.ndarray, noise_column: np.ndarray) -> np.ndarray:
    """Observation-side corruption: true dynamics untouched."""
    return state_observed + noise_column


def inject_arns(
    state: np.ndarray, action: np.ndarray, noise_column: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Transition-side corruption: perturbed state and action enter the plant.

    noise_column stacks N state entries followed by the action entries.
    """
    n = state.shape[0]
    if noise_column.shape[0] != n + action.shape[0]:
        raise ShapeError(
            f"arns noise column must have {n}+{action.shape[0]} entries, got {noise_column.shape[0]}"
        )
    return state + noise_column[:n], action + noise_column[n:]


def apply_semantic(action: np.ndarray, spec: AnomalySpec, rng: np.random.Generator) -> np.ndarray:
    """Action-side semantic anomalies; identity for plant-side kinds.

    action_noise draws from `rng` (the episode's anomaly stream), so clean and
    anomalous runs share the main stream exactly.
    """
    if spec.kind == "action_factor":
        return action * float(spec.params["factor"])
    if spec.kind == "action_noise":
        return action + rng.normal(0.0, float(spec.params["std"]), size=action.shape)
    if spec.kind == "action_offset":
        return action + np.broadcast_to(np.asarray(spec.params["offset"], dtype=np.float64), action.shape)
    if spec.kind in ("body_mass_factor", "force_vector") or spec.kind in AR_KINDS:
        return action
    raise ConfigError(f"unknown anomaly kind {spec.kind!r}")


def _semantic_mass_factor(spec: AnomalySpec | None, active: bool) -> float:
    if active and spec is not None and spec.kind == "body_mass_factor":
        return float(spec.params["factor"])
    return 1.0


def _semantic_force(spec: AnomalySpec | None, active: bool) -> np.ndarray | float:
    if active and spec is not None and spec.kind == "force_vector":
        return np.asarray(spec.params["force"], dtype=np.float64)
    return 0.0


# ---------------------------------------------------------------------------
# Episode simulation
# ---------------------------------------------------------------------------


def simulate(
    plant: Any,
    controller: Any,
    n_steps: int,
    seed: int,
    spec: AnomalySpec | None = None,
    meta: dict[str, Any] | None = None,
) -> EpisodeMatrix:
    """Roll out one episode; a pure function of its arguments.

    With an AR anomaly the clean same-seed episode is first replayed to
    calibrate the noise matrix (innovation std = level_mult x the clean
    per-dimension std), then the run repeats with the anomaly applied from
    spec.onset onward.
    """
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    if spec is not None:
        validate_spec_for_plant(spec, plant)
        if spec.onset >= n_steps:
            raise ConfigError(f"onset {spec.onset} outside episode of length {n_steps}")

    noise: np.ndarray | None = None
    if spec is not None and spec.kind in AR_KINDS:
        clean_obs, clean_actions = _rollout(plant, controller, n_steps, seed, spec=None, noise=None)
        proc = ArProcess(order=spec.params["order"], coefs=spec.params["coefs"], noise_std=1.0)
        n_rows = plant.n_dims + (plant.action_dim if spec.kind == "arns" else 0)
        noise = noise_matrix(proc, n_rows, n_steps, seed)
        mult = spec.params["level_mult"]
        scale = mult * clean_obs.std(axis=1)
        if spec.kind == "arns":
            scale = np.concatenate([scale, mult * clean_actions.std(axis=1)])
        noise *= scale[:, None]

    data, _ = _rollout(plant, controller, n_steps, seed, spec=spec, noise=noise)
    full_meta = {"plant": type(plant).__name__, "seed": seed}
    if spec is not None:
        full_meta.update(kind=spec.kind, level=spec.level)
    if meta:
        full_meta.update(meta)
    return EpisodeMatrix(data=data, onset=None if spec is None else spec.onset, meta=full_meta)


def _rollout(
    plant: Any,
    controller: Any,
    n_steps: int,
    seed: int,
    spec: AnomalySpec | None,
    noise: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray]:
    main_rng = rng_from(seed, _MAIN)
    semantic_rng = rng_from(seed, _SEMANTIC)

    state = plant.initial_state(main_rng)
    obs = state.copy()
    data = np.empty((plant.n_dims, n_steps))
    actions = np.zeros((plant.action_dim, max(1, n_steps - 1)))
    data[:, 0] = obs

    for t in range(1, n_steps):
        action = np.asarray(controller.act(obs, main_rng), dtype=np.float64).reshape(plant.action_dim)
        active = spec is not None and t >= spec.onset
        mass_factor = _semantic_mass_factor(spec, active)
        extra_force = _semantic_force(spec, active)
        state_in = state
        if active and spec.kind in SEMANTIC_KINDS:
            action = apply_semantic(action, spec, semantic_rng)
        if active and spec.kind == "arns":
            state_in, action = inject_arns(state, action, noise[:, t])
        state = plant.step(state_in, action, main_rng, mass_factor=mass_factor, extra_force=extra_force)
        obs = state.copy()
        if active and spec.kind == "arno":
            obs = inject_arno(obs, noise[: plant.n_dims, t])
        data[:, t] = obs
        actions[:, t - 1] = action
    return data, actions


def make_ar_spec(kind: str, level: str, order: int, onset: int, level_mult: float | None = None) -> AnomalySpec:
    """Convenience constructor for arno/arns specs with default coefficients."""
    if kind not in AR_KINDS:
        raise ConfigError(f"{kind!r} is not an AR anomaly kind")
    if level not in LEVEL_MULTS and level_mult is None:
        raise ConfigError(f"unknown AR level {level!r}, expected one of {tuple(LEVEL_MULTS)}")
    params: dict[str, Any] = {"order": order, "coefs": DEFAULT_AR_COEFS[order]}
    if level_mult is not None:
        params["level_mult"] = level_mult
    return AnomalySpec(kind=kind, level=level, params=params, onset=onset)
