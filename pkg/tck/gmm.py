"""
gmm.py — MAP-EM for a diagonal GMM with time-dependent means and missing cells

One ensemble member of the cluster kernel. Every component k has a mean
curve mu[k, v, t] for each attribute v in the partition and one variance
s2[k, v] per attribute, constant over time. A record's likelihood is the
product of Gaussian densities over its observed cells only, so missing
cells neither help nor hurt any component.

Priors:
  - means: Gaussian centered on the per-time observed mean m0[v, t], with a
    smoothing covariance S0[t, t'] = b0 * exp(-a0 * (t - t')^2)
  - variances: inverse-gamma with strength n0 and scale s0[v], the observed
    variance of the attribute

The M-step updates weights, then means, then variances (each a closed-form
conditional maximizer), so the log-posterior never decreases.

Usage:
    cfg = PartitionConfig(identity=(3, 1), component_count=3, record_subset=..., ...)
    gmm = fit_map_em(train, cfg, EmSettings())
    probs = posteriors(train.values, train.masks, gmm)   # (n, c)
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp
from sklearn.cluster import kmeans_plusplus

from mts.dataset import MtsDataset, MtsRecord
from mts.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)
EMPTY_COMPONENT_FRACTION = 1e-10
PRIOR_JITTER = 1e-8


@dataclass
class EmSettings:
    tol: float = 1e-6
    max_iter: int = 100
    var_floor: float = 1e-6
    a0: float = 1.0
    b0: float = 1.0
    n0_fraction: float = 0.01  # n0 = n0_fraction * records in the partition

    def validate(self):
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("EM needs tol > 0 and max_iter >= 1")
        if self.var_floor <= 0:
            raise ConfigError(f"var_floor must be positive, got {self.var_floor}")
        if self.a0 <= 0 or self.b0 <= 0:
            raise ConfigError("prior smoothing a0 and b0 must be positive")
        if self.n0_fraction < 0:
            raise ConfigError(f"n0_fraction must be >= 0, got {self.n0_fraction}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EmSettings":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown EM settings: {sorted(unknown)}")
        settings = cls(**data)
        settings.validate()
        return settings


@dataclass
class PartitionConfig:
    """
    Which slice of the training data one GMM sees.

    `identity` is the (c, r) pair the config was drawn for; `component_count`
    may be smaller than c when c exceeds the record subset. The time segment
    is 0-based and inclusive at both ends.
    """
    identity: tuple
    component_count: int
    record_subset: tuple
    attribute_subset: tuple
    time_segment: tuple
    init_seed: int

    def __post_init__(self):
        self.identity = tuple(int(x) for x in self.identity)
        self.record_subset = tuple(int(i) for i in self.record_subset)
        self.attribute_subset = tuple(int(a) for a in self.attribute_subset)
        self.time_segment = tuple(int(t) for t in self.time_segment)
        if not self.record_subset or not self.attribute_subset:
            raise ConfigError(f"partition {self.identity}: subsets must be non-empty")
        if self.time_segment[0] > self.time_segment[1]:
            raise ConfigError(f"partition {self.identity}: empty time segment {self.time_segment}")
        if not 1 <= self.component_count <= len(self.record_subset):
            raise ConfigError(
                f"partition {self.identity}: {self.component_count} components "
                f"for {len(self.record_subset)} records"
            )

    @property
    def segment_len(self) -> int:
        return self.time_segment[1] - self.time_segment[0] + 1

    def to_dict(self) -> dict:
        return {
            "identity": list(self.identity),
            "component_count": self.component_count,
            "record_subset": list(self.record_subset),
            "attribute_subset": list(self.attribute_subset),
            "time_segment": list(self.time_segment),
            "init_seed": self.init_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PartitionConfig":
        return cls(**data)


@dataclass
class GmmPartition:
    config: PartitionConfig
    weights: np.ndarray      # (c,)
    means: np.ndarray        # (c, V, L)
    variances: np.ndarray    # (c, V)
    converged: bool
    n_iter: int
    trace: list = field(default_factory=list)               # log-posterior per E-step
    reseeded_iterations: list = field(default_factory=list)

    @property
    def n_components(self) -> int:
        return len(self.weights)


# ── Array helpers ────────────────────────────────────────────


def slice_partition(values: np.ndarray, masks: np.ndarray, cfg: PartitionConfig):
    """Restrict (n, D, T) arrays to the partition's attributes and time segment."""
    t_a, t_b = cfg.time_segment
    attrs = list(cfg.attribute_subset)
    X = np.asarray(values, dtype=float)[:, attrs, t_a:t_b + 1]
    M = np.asarray(masks, dtype=float)[:, attrs, t_a:t_b + 1]
    return X, M


def smoothing_covariance(length: int, a0: float, b0: float) -> np.ndarray:
    t = np.arange(length, dtype=float)
    return b0 * np.exp(-a0 * (t[:, None] - t[None, :]) ** 2)


def empirical_priors(X: np.ndarray, M: np.ndarray, var_floor: float):
    """
    Per-time observed mean m0 (V, L) and per-attribute observed variance s0 (V,).

    A time step with no observation falls back to the attribute's overall
    observed mean; an attribute with no observation gets mean 0 and variance 1.
    """
    counts_t = M.sum(axis=0)
    sums_t = (M * X).sum(axis=0)
    counts_v = counts_t.sum(axis=1)
    sums_v = sums_t.sum(axis=1)
    attr_mean = np.divide(sums_v, counts_v, out=np.zeros_like(sums_v), where=counts_v > 0)
    m0 = np.where(
        counts_t > 0,
        np.divide(sums_t, counts_t, out=np.zeros_like(sums_t), where=counts_t > 0),
        attr_mean[:, None],
    )
    sq = (M * (X - attr_mean[None, :, None]) ** 2).sum(axis=(0, 2))
    s0 = np.divide(sq, counts_v, out=np.ones_like(sq), where=counts_v > 0)
    s0 = np.where(counts_v > 0, np.maximum(s0, var_floor), 1.0)
    return m0, s0


def log_likelihood(X: np.ndarray, M: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """(m, c) log-density of each record under each component, observed cells only."""
    n_obs = M.sum(axis=2)                                                    # (m, V)
    quad = np.einsum("ivt,ikvt->ikv", M, (X[:, None] - means[None]) ** 2)    # (m, c, V)
    return -0.5 * (
        n_obs[:, None, :] * (LOG_2PI + np.log(variances)[None])
        + quad / variances[None]
    ).sum(axis=2)


def _responsibilities(X, M, weights, means, variances):
    with np.errstate(divide="ignore"):
        log_joint = np.log(weights)[None] + log_likelihood(X, M, means, variances)
    log_norm = logsumexp(log_joint, axis=1)
    return np.exp(log_joint - log_norm[:, None]), log_norm


def posteriors(values: np.ndarray, masks: np.ndarray, gmm: GmmPartition) -> np.ndarray:
    """
    (n, c) component posteriors for full (n, D, T) arrays.

    Records without any observed cell in the partition get the weights.
    """
    X, M = slice_partition(values, masks, gmm.config)
    R, log_norm = _responsibilities(X, M, gmm.weights, gmm.means, gmm.variances)
    if not np.isfinite(log_norm).all():
        raise NumericalError(f"partition {gmm.config.identity}: non-finite likelihood")
    empty = M.sum(axis=(1, 2)) == 0
    R[empty] = gmm.weights
    return R


def posterior(rec: MtsRecord, gmm: GmmPartition) -> np.ndarray:
    return posteriors(rec.values[None], rec.mask[None], gmm)[0]


# ── MAP-EM ───────────────────────────────────────────────────


def _log_prior(means, variances, m0, s0, S0_inv, n0) -> float:
    diff = means - m0[None]
    smooth = np.einsum("kvt,ts,kvs->", diff, S0_inv, diff)
    shrink = (-0.5 * n0 * np.log(variances) - 0.5 * n0 * s0[None] / variances).sum()
    return float(-0.5 * smooth + shrink)


def _initial_means(X, M, m0, c, init_seed):
    imputed = np.where(M > 0, X, m0[None])
    flat = imputed.reshape(len(X), -1)
    centers, _ = kmeans_plusplus(flat, n_clusters=c, random_state=init_seed)
    return centers.reshape((c,) + m0.shape), imputed


def fit_on_arrays(values: np.ndarray, masks: np.ndarray, cfg: PartitionConfig, em: EmSettings) -> GmmPartition:
    """Fit one partition given the full (n, D, T) training arrays."""
    records = list(cfg.record_subset)
    X, M = slice_partition(np.asarray(values)[records], np.asarray(masks)[records], cfg)
    m, V, L = X.shape
    c = cfg.component_count
    if m < c:
        raise ConfigError(f"partition {cfg.identity}: {m} records for {c} components")

    m0, s0 = empirical_priors(X, M, em.var_floor)
    S0_inv = np.linalg.inv(smoothing_covariance(L, em.a0, em.b0) + PRIOR_JITTER * em.b0 * np.eye(L))
    prior_rhs = m0 @ S0_inv.T                                                # (V, L)
    n0 = em.n0_fraction * m
    diag = np.arange(L)
    n_obs = M.sum(axis=2)
    MX = M * X

    means, imputed = _initial_means(X, M, m0, c, cfg.init_seed)
    weights = np.full(c, 1.0 / c)
    variances = np.tile(s0, (c, 1))
    rng = np.random.default_rng(cfg.init_seed)

    trace = []
    reseeded = []
    converged = False
    previous: Optional[float] = None
    n_iter = 0

    for n_iter in range(1, em.max_iter + 1):
        # E-step
        R, log_norm = _responsibilities(X, M, weights, means, variances)
        objective = float(log_norm.sum()) + _log_prior(means, variances, m0, s0, S0_inv, n0)
        if not np.isfinite(objective):
            raise NumericalError(f"partition {cfg.identity}: non-finite log-posterior at iteration {n_iter}")
        trace.append(objective)
        logger.debug(f"partition {cfg.identity} iter {n_iter}: log-posterior {objective:.6f}")

        if previous is not None and abs(objective - previous) <= em.tol * max(abs(previous), 1e-300):
            converged = True
            break
        previous = objective

        Nk = R.sum(axis=0)
        empty = np.flatnonzero(Nk < EMPTY_COMPONENT_FRACTION * m)
        if len(empty):
            for k in empty:
                j = int(rng.integers(m))
                means[k] = imputed[j]
                variances[k] = s0
                weights[k] = 1.0 / c
            weights = weights / weights.sum()
            reseeded.append(n_iter)
            previous = None
            logger.warning(
                f"partition {cfg.identity}: re-seeded {len(empty)} empty component(s) at iteration {n_iter}"
            )
            continue

        # M-step: weights, then means given variances, then variances given means
        weights = Nk / m

        RM = np.einsum("ik,ivt->kvt", R, M)
        RX = np.einsum("ik,ivt->kvt", R, MX)
        A = np.broadcast_to(S0_inv, (c, V, L, L)).copy()
        A[..., diag, diag] += RM / variances[:, :, None]
        b = prior_rhs[None] + RX / variances[:, :, None]
        means = np.linalg.solve(A, b[..., None])[..., 0]

        SS = np.einsum("ik,ivt,ikvt->kv", R, M, (X[:, None] - means[None]) ** 2)
        Nkv = R.T @ n_obs
        denom = n0 + Nkv
        variances = np.divide(n0 * s0[None] + SS, denom, out=np.tile(s0, (c, 1)), where=denom > 0)
        variances = np.maximum(variances, em.var_floor)

    if not converged:
        logger.debug(f"partition {cfg.identity}: stopped at max_iter={em.max_iter}")

    return GmmPartition(
        config=cfg,
        weights=weights,
        means=means,
        variances=variances,
        converged=converged,
        n_iter=n_iter,
        trace=trace,
        reseeded_iterations=reseeded,
    )


def fit_map_em(ds: MtsDataset, cfg: PartitionConfig, em: Optional[EmSettings] = None) -> GmmPartition:
    em = em or EmSettings()
    em.validate()
    return fit_on_arrays(ds.values, ds.masks, cfg, em)
