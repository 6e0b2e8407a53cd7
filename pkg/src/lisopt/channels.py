"""Channel generation: user placement, log-distance attenuation, IID Rayleigh draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the three propagation matrices.

    h1 : (N, M) surface <- BS
    h2 : (K, N) users <- surface, row k serves user k
    h  : (K, M) users <- BS direct path
    """

    h1: np.ndarray
    h2: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        for name in ("h1", "h2", "h"):
            a = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, a)
            if a.ndim != 2:
                raise ValueError(f"{name} must be a matrix, got shape {a.shape}")
            if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
                raise ValueError(f"{name} contains non-finite entries")
        n, m = self.h1.shape
        if self.h2.shape[1] != n or self.h.shape[1] != m or self.h2.shape[0] != self.h.shape[0]:
            raise ValueError(
                f"inconsistent channel dimensions: h1 {self.h1.shape}, h2 {self.h2.shape}, h {self.h.shape}"
            )


def pathloss_gain(d: float, link: str, config: SystemConfig) -> float:
    """Linear variance of a channel entry at distance d for the given link type."""
    if d <= 0.0:
        raise ValueError(f"distance must be positive, got {d}")
    params = config.pathloss.for_link(link)
    return params.beta0 * (d / params.d0) ** (-params.exponent)


def _complex_gaussian(rng: np.random.Generator, shape, variance) -> np.ndarray:
    # circularly symmetric: each of real/imag carries half the variance
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channels(config: SystemConfig, seed: int) -> ChannelSet:
    """Draw one IID complex-Gaussian realization of all three links.

    Users are re-dropped uniformly in the configured rectangle on every call;
    entry variances follow the per-link pathloss at the resulting distances.
    Deterministic in (config, seed); the draw order is fixed as user
    positions, then h1, h2, h, so the three matrices are mutually
    independent.
    """
    rng = np.random.default_rng(seed)
    xmin, xmax, ymin, ymax = config.geometry.user_box
    users = np.column_stack(
        [rng.uniform(xmin, xmax, config.k), rng.uniform(ymin, ymax, config.k)]
    )
    bs = np.asarray(config.geometry.bs, dtype=float)
    lis = np.asarray(config.geometry.lis, dtype=float)

    d_bs_lis = float(np.linalg.norm(lis - bs))
    d_direct = np.linalg.norm(users - bs, axis=1)
    d_lis_user = np.linalg.norm(users - lis, axis=1)

    var_h1 = pathloss_gain(d_bs_lis, "bs_lis", config)
    var_h2 = np.array([pathloss_gain(d, "lis_user", config) for d in d_lis_user])
    var_h = np.array([pathloss_gain(d, "bs_user", config) for d in d_direct])
    for name, variance in (("h1", var_h1), ("h2", var_h2.min()), ("h", var_h.min())):
        if variance <= 0.0:
            raise ValueError(f"channel variance for {name} must be positive, got {variance}")

    h1 = _complex_gaussian(rng, (config.n, config.m), var_h1)
    h2 = _complex_gaussian(rng, (config.k, config.n), var_h2[:, None])
    h = _complex_gaussian(rng, (config.k, config.m), var_h[:, None])
    return ChannelSet(h1=h1, h2=h2, h=h)
