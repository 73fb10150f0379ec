"""Gaussian beliefs and the travel + information-gain cost between them.

A belief is a Gaussian (mean, covariance) over the robot's position.
Moving a belief costs Euclidean travel distance plus ``alpha`` times the
entropy reduction needed to reach the target covariance after process
noise has grown the uncertainty along the way.  The information term is
the value of a max-det program with a closed-form solution, so all cost
evaluations here are direct linear algebra, no iterative solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import (
    PSD_TOL,
    ZERO_DIST,
    ValidationError,
    as_vector,
    check_psd,
    check_spd,
    min_eigval,
    spectral_norm_sym,
    symmetrize,
)

__all__ = [
    "Belief",
    "ProcessNoise",
    "BeliefChain",
    "CostBreakdown",
    "travel_cost",
    "prior_covariance",
    "lossless_project",
    "info_cost",
    "steering_cost",
    "is_lossless",
    "chain_cost",
    "chain_lossless_modify",
    "chain_total_variation",
    "dhat",
]


@dataclass(frozen=True, eq=False)
class Belief:
    """A Gaussian belief: mean position and SPD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vector(self.mean, name="mean").copy()
        cov = check_spd(self.cov, dim=mean.shape[0], name="cov")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class ProcessNoise:
    """Per-unit-distance growth of position covariance (symmetric PSD)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = check_psd(self.matrix, name="process noise")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def isotropic(cls, intensity: float, dim: int) -> "ProcessNoise":
        return cls(float(intensity) * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class BeliefChain:
    """An ordered sequence of beliefs sharing one dimension."""

    nodes: tuple[Belief, ...]

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not nodes:
            raise ValidationError("a belief chain needs at least one node")
        d = nodes[0].dim
        if any(b.dim != d for b in nodes):
            raise ValidationError("all chain nodes must share one dimension")
        object.__setattr__(self, "nodes", nodes)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __getitem__(self, i):
        return self.nodes[i]

    @property
    def dim(self) -> int:
        return self.nodes[0].dim


@dataclass(frozen=True)
class CostBreakdown:
    """Travel and information components of a steering cost."""

    travel: float
    info: float
    total: float

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(
            self.travel + other.travel,
            self.info + other.info,
            self.total + other.total,
        )

    @staticmethod
    def zero() -> "CostBreakdown":
        return CostBreakdown(0.0, 0.0, 0.0)


def travel_cost(b_from: Belief, b_to: Belief) -> float:
    """Euclidean distance between the belief means."""
    if b_from.dim != b_to.dim:
        raise ValidationError("belief dimensions differ")
    return float(np.linalg.norm(b_to.mean - b_from.mean))


def prior_covariance(p_from: np.ndarray, dist: float, noise: ProcessNoise) -> np.ndarray:
    """Covariance after an open-loop move of length ``dist``."""
    if dist < 0.0:
        raise ValidationError(f"travel distance must be nonnegative, got {dist}")
    p = symmetrize(np.asarray(p_from, dtype=float))
    if dist < ZERO_DIST:
        return p
    return p + dist * noise.matrix


def pencil_eigvals(p_prior: np.ndarray, p_post: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``post^{-1/2} @ prior @ post^{-1/2}``.

    Accepts stacked matrices (``(..., d, d)``); the posterior matrices
    must be SPD.  These are the generalized eigenvalues of the pair
    (prior, post) and drive both the information cost and the capped
    covariance projection.
    """
    a = np.asarray(p_prior, dtype=float)
    b = np.asarray(p_post, dtype=float)
    d = a.shape[-1]
    if d == 1:
        return (a[..., 0, 0] / b[..., 0, 0])[..., None]
    if d == 2:
        # det(A - t B) = 0 reduces to a quadratic with real positive roots.
        a11, a12, a22 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 1]
        b11, b12, b22 = b[..., 0, 0], b[..., 0, 1], b[..., 1, 1]
        c2 = b11 * b22 - b12 * b12
        c1 = a11 * b22 + a22 * b11 - 2.0 * a12 * b12
        c0 = a11 * a22 - a12 * a12
        disc = np.sqrt(np.maximum(c1 * c1 - 4.0 * c2 * c0, 0.0))
        lo = (c1 - disc) / (2.0 * c2)
        hi = (c1 + disc) / (2.0 * c2)
        return np.stack([lo, hi], axis=-1)
    # General case: whiten by the Cholesky factor of the posterior.
    chol = np.linalg.cholesky(b)
    half = np.linalg.solve(chol, a)
    whitened = np.linalg.solve(chol, np.swapaxes(half, -1, -2))
    return np.linalg.eigvalsh(symmetrize(whitened))


def _info_from_pencil(sigma: np.ndarray) -> np.ndarray:
    """Half the summed log of pencil eigenvalues clipped below at one."""
    return 0.5 * np.sum(np.log(np.maximum(sigma, 1.0)), axis=-1)


def lossless_project(p_prior: np.ndarray, p_post: np.ndarray) -> np.ndarray:
    """Largest-determinant covariance dominated by both arguments.

    The optimizer caps, in posterior-whitened coordinates, every
    eigenvalue of the prior at one.  The result Q satisfies
    Q <= p_prior and Q <= p_post, equals p_post when p_post <= p_prior,
    and equals p_prior when p_prior <= p_post.
    """
    prior = check_spd(p_prior, name="prior covariance")
    post = check_spd(p_post, dim=prior.shape[0], name="posterior covariance")
    w, v = np.linalg.eigh(post)
    if w[0] <= 0.0:
        raise ValidationError("posterior covariance is numerically singular")
    sqrt_post = (v * np.sqrt(w)) @ v.T
    inv_sqrt_post = (v / np.sqrt(w)) @ v.T
    whitened = symmetrize(inv_sqrt_post @ prior @ inv_sqrt_post)
    sigma, u = np.linalg.eigh(whitened)
    capped = np.minimum(sigma, 1.0)
    q = sqrt_post @ (u * capped) @ u.T @ sqrt_post
    return symmetrize(q)


def info_cost(p_prior: np.ndarray, p_post: np.ndarray) -> float:
    """Minimum entropy reduction to steer ``p_prior`` toward ``p_post``.

    Equals ``0.5 * (logdet(prior) - logdet(Q))`` with Q the capped
    projection above; zero whenever the posterior dominates the prior.
    """
    prior = check_spd(p_prior, name="prior covariance")
    post = check_spd(p_post, dim=prior.shape[0], name="posterior covariance")
    sigma = pencil_eigvals(prior, post)
    return float(_info_from_pencil(sigma))


def steering_cost(
    b_from: Belief, b_to: Belief, alpha: float, noise: ProcessNoise
) -> CostBreakdown:
    """Cost of steering one belief to another: travel + alpha * info."""
    if alpha < 0.0:
        raise ValidationError(f"alpha must be nonnegative, got {alpha}")
    travel = travel_cost(b_from, b_to)
    prior = prior_covariance(b_from.cov, travel, noise)
    info = info_cost(prior, b_to.cov)
    return CostBreakdown(travel, info, travel + alpha * info)


def is_lossless(
    b_from: Belief, b_to: Belief, noise: ProcessNoise, tol: float = PSD_TOL
) -> bool:
    """True iff the target covariance is dominated by the grown prior."""
    travel = travel_cost(b_from, b_to)
    prior = prior_covariance(b_from.cov, travel, noise)
    return min_eigval(prior - b_to.cov) >= -tol


def chain_cost(chain: BeliefChain, alpha: float, noise: ProcessNoise) -> CostBreakdown:
    """Componentwise sum of steering costs over consecutive chain pairs."""
    total = CostBreakdown.zero()
    for a, b in zip(chain.nodes[:-1], chain.nodes[1:]):
        total = total + steering_cost(a, b, alpha, noise)
    return total


def chain_lossless_modify(chain: BeliefChain, noise: ProcessNoise) -> BeliefChain:
    """Shrink chain covariances front-to-back until every transition is lossless.

    Means are kept; each covariance is replaced by the capped projection
    of itself against the prior grown from the (already modified)
    predecessor.  The result never costs more than the input.
    """
    if len(chain) < 2:
        raise ValidationError("lossless modification needs a chain of length >= 2")
    out = [chain.nodes[0]]
    for node in chain.nodes[1:]:
        prev = out[-1]
        dist = float(np.linalg.norm(node.mean - prev.mean))
        prior = prior_covariance(prev.cov, dist, noise)
        out.append(Belief(node.mean, lossless_project(prior, node.cov)))
    return BeliefChain(tuple(out))


def chain_total_variation(
    chain_a: BeliefChain, chain_b: BeliefChain, noise: ProcessNoise
) -> float:
    """Total-variation norm of the difference of two equally long chains.

    Sums, over the difference chain, the initial mean norm weighted by
    the spectral norm of the process noise plus the initial covariance
    spectral norm, then the same quantities for every increment.
    """
    if len(chain_a) != len(chain_b):
        raise ValidationError("chains must have equal length")
    if chain_a.dim != chain_b.dim:
        raise ValidationError("chains must share one dimension")
    w_bar = spectral_norm_sym(noise.matrix)
    dx = [a.mean - b.mean for a, b in zip(chain_a, chain_b)]
    dp = [a.cov - b.cov for a, b in zip(chain_a, chain_b)]
    total = float(np.linalg.norm(dx[0])) * w_bar + spectral_norm_sym(dp[0])
    for k in range(len(dx) - 1):
        total += float(np.linalg.norm(dx[k + 1] - dx[k])) * w_bar
        total += spectral_norm_sym(dp[k + 1] - dp[k])
    return total


def dhat(b1: Belief, b2: Belief) -> float:
    """Symmetric proximity used for nearest/neighbor queries.

    Euclidean distance between means plus the Frobenius distance between
    covariances.  This is a true metric, unlike the steering cost.
    """
    if b1.dim != b2.dim:
        raise ValidationError("belief dimensions differ")
    return float(
        np.linalg.norm(b2.mean - b1.mean) + np.linalg.norm(b2.cov - b1.cov)
    )
