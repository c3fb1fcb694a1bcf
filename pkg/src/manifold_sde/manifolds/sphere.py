"""The round sphere |x| = radius in R^n, points stored as n x 1 matrices."""

from __future__ import annotations

import numpy as np

from ..geometry import Constraint, ManifoldHandle, TubularRetraction
from ..linalg import frobenius_norm, mT
from ..rng import RngStream


def make_sphere(n: int, radius: float = 1.0) -> ManifoldHandle:
    if n < 2:
        raise ValueError(f"sphere needs ambient dimension >= 2, got n={n}")
    if radius <= 0.0:
        raise ValueError(f"sphere radius must be positive, got {radius}")
    r2 = radius * radius

    def project(x, w):
        return w - x @ (mT(x) @ w) / r2

    def christoffel(x, u, v):
        return x @ (mT(u) @ v) / r2

    def identity_op(x, w):
        return np.broadcast_to(w, np.broadcast(x, w).shape).astype(float)

    def rescale(q):
        return radius * q / frobenius_norm(q)[..., None, None]

    tubular = TubularRetraction(
        mapping=rescale,
        differential=lambda x, w: w - x @ (mT(x) @ w) / r2,
        domain=lambda q: frobenius_norm(q) > 1e-12,
    )

    constraint = Constraint(
        value=lambda x: np.sum(x * x, axis=(-2, -1)) - r2,
        grad=lambda x: 2.0 * x,
        hess=lambda x, u, v: 2.0 * np.sum(u * v, axis=(-2, -1)),
    )

    drift_coeff = -(n - 1) / (2.0 * r2)

    def random_point(rng: RngStream):
        g = rng.normal((n, 1))
        while float(frobenius_norm(g)) < 1e-6:
            g = rng.normal((n, 1))
        return radius * g / float(frobenius_norm(g))

    def default_point():
        e1 = np.zeros((n, 1))
        e1[0, 0] = radius
        return e1

    return ManifoldHandle(
        name=f"sphere({n})" if radius == 1.0 else f"sphere({n},r={radius:g})",
        shape=(n, 1),
        dim=n - 1,
        metric=identity_op,
        metric_inv=identity_op,
        project=project,
        christoffel=christoffel,
        sigma=identity_op,
        sigma_t=identity_op,
        tubular=tubular,
        ito_drift=lambda x: drift_coeff * x,
        strat_drift=lambda x: np.zeros_like(x),
        random_point=random_point,
        default_point=default_point,
        constraints=(constraint,),
        compact=True,
        params={"n": n, "radius": radius},
    )
