"""Sensor synthesis and sensor-constrained transition feasibility.

A planned covariance reduction from a grown prior to a posterior is
realizable by a linear Gaussian measurement whose information matrix is
the difference of the precisions.  Conversely, when the available
sensor at a location is fixed, a transition is feasible only if the
target covariance is no smaller than the best posterior that sensor can
deliver there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import Belief, ProcessNoise, is_lossless, prior_covariance, travel_cost
from .geometry import AlignedBox, Environment, segment_collision_free
from .validation import (
    PSD_TOL,
    ValidationError,
    check_psd,
    check_spd,
    min_eigval,
    symmetrize,
)

__all__ = [
    "SensorModel",
    "SensorMap",
    "synthesize_sensor",
    "sensor_factorization",
    "constrained_posterior",
    "feas_check2",
]


@dataclass(frozen=True, eq=False)
class SensorModel:
    """Linear measurement y = C x + v with v ~ N(0, V)."""

    observation: np.ndarray   # C, shape (m, d)
    noise: np.ndarray         # V, shape (m, m), SPD

    def __post_init__(self):
        c = np.asarray(self.observation, dtype=float)
        if c.ndim != 2:
            raise ValidationError("observation matrix must be 2-D")
        v = check_spd(self.noise, dim=c.shape[0], name="measurement noise")
        c = c.copy()
        c.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "observation", c)
        object.__setattr__(self, "noise", v)

    @property
    def state_dim(self) -> int:
        return self.observation.shape[1]

    def information(self) -> np.ndarray:
        """Information matrix C' V^{-1} C."""
        c = self.observation
        return symmetrize(c.T @ np.linalg.solve(self.noise, c))


class SensorMap:
    """Region-dependent sensor availability.

    Lookup at a position returns the sensor of the first matching region
    box, falling back to the default; ``None`` means no measurement is
    available there.
    """

    def __init__(self, regions=None, default: SensorModel | None = None):
        self.regions: list[tuple[AlignedBox, SensorModel | None]] = list(regions or [])
        self.default = default

    def sensor_at(self, position: np.ndarray) -> SensorModel | None:
        for box, sensor in self.regions:
            if box.contains(position):
                return sensor
        return self.default


def synthesize_sensor(p_prior: np.ndarray, p_post: np.ndarray) -> np.ndarray:
    """Information matrix realizing a planned covariance reduction.

    Returns ``M = post^{-1} - prior^{-1}`` (PSD when the posterior is
    dominated by the prior); a Kalman update with any sensor satisfying
    C' V^{-1} C = M maps the prior exactly onto the posterior.
    """
    prior = check_spd(p_prior, name="prior covariance")
    post = check_spd(p_post, dim=prior.shape[0], name="posterior covariance")
    if min_eigval(prior - post) < -PSD_TOL:
        raise ValidationError(
            "posterior is not dominated by the prior; no sensor can realize it"
        )
    m = symmetrize(np.linalg.inv(post) - np.linalg.inv(prior))
    # Clip the tiny negative eigenvalues that tolerance-level domination allows.
    w, v = np.linalg.eigh(m)
    return symmetrize((v * np.maximum(w, 0.0)) @ v.T)


def sensor_factorization(information: np.ndarray) -> SensorModel:
    """Canonical sensor with the given information matrix: C = M^{1/2}, V = I."""
    m = check_psd(information, name="information matrix")
    w, v = np.linalg.eigh(m)
    root = symmetrize((v * np.sqrt(np.maximum(w, 0.0))) @ v.T)
    return SensorModel(root, np.eye(m.shape[0]))


def constrained_posterior(p_prior: np.ndarray, sensor: SensorModel) -> np.ndarray:
    """Best covariance reachable from the prior with one use of the sensor."""
    prior = check_spd(p_prior, name="prior covariance")
    info = sensor.information()
    if info.shape != prior.shape:
        raise ValidationError("sensor dimension does not match the prior")
    return symmetrize(np.linalg.inv(np.linalg.inv(prior) + info))


def feas_check2(
    b_from: Belief,
    b_to: Belief,
    sensor_map: SensorMap,
    env: Environment,
    noise: ProcessNoise,
    tol: float = PSD_TOL,
) -> bool:
    """Lossless, collision-free, and realizable with the local sensor.

    On top of the plain feasibility check, the target covariance must
    dominate the posterior the arrival-location sensor can produce from
    the grown prior; without a sensor there, only sensing-free
    transitions (target at least the prior) pass.
    """
    if not is_lossless(b_from, b_to, noise, tol):
        return False
    if not segment_collision_free(b_from, b_to.mean, noise, env):
        return False
    dist = travel_cost(b_from, b_to)
    prior = prior_covariance(b_from.cov, dist, noise)
    sensor = sensor_map.sensor_at(b_to.mean)
    floor = prior if sensor is None else constrained_posterior(prior, sensor)
    return min_eigval(b_to.cov - floor) >= -tol
