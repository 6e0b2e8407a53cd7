"""Shared test fixtures: normalized configs and geometry-free channel draws."""

import numpy as np

from lisopt import (
    CONTINUOUS,
    ChannelSet,
    PathlossModel,
    PathlossParams,
    SystemConfig,
    dbm_to_watts,
)


def unit_pathloss(direct_loss_db=10.0):
    """Distance-flat pathloss: hop entries unit variance, direct link attenuated."""
    return PathlossModel(
        bs_user=PathlossParams(exponent=0.0, ref_loss_db=direct_loss_db),
        bs_lis=PathlossParams(exponent=0.0, ref_loss_db=0.0),
        lis_user=PathlossParams(exponent=0.0, ref_loss_db=0.0),
    )


def make_config(k=2, m=2, n=4, b=1, p_budget_dbm=-10.0, sigma2=1e-4, **overrides):
    """Desk-scale config with normalized channels and mild power constants."""
    fields = dict(
        p_c=1e-3,
        p_n_of_b={1: dbm_to_watts(-5.0), 2: dbm_to_watts(5.0),
                  CONTINUOUS: dbm_to_watts(15.0)},
        pathloss=unit_pathloss(),
    )
    fields.update(overrides)
    return SystemConfig(m=m, k=k, n=n, b=b, p_budget=dbm_to_watts(p_budget_dbm),
                        sigma2=sigma2, **fields)


def complex_gaussian(rng, shape, variance=1.0):
    return np.sqrt(variance / 2.0) * (rng.standard_normal(shape)
                                      + 1j * rng.standard_normal(shape))


def random_channels(rng, k, m, n, scale=1.0):
    """Unit-variance channel triple with no geometry attached."""
    return ChannelSet(
        h1=scale * complex_gaussian(rng, (n, m)),
        h2=scale * complex_gaussian(rng, (k, n)),
        h=scale * complex_gaussian(rng, (k, m)),
    )
