"""Constraint builders shared between manifold families."""

from __future__ import annotations

import numpy as np

from ..geometry import Constraint


def orthogonality_constraints(
    shape: tuple[int, int],
    rows: tuple[int, int] | None = None,
    cols: tuple[int, int] | None = None,
) -> tuple[Constraint, ...]:
    """Constraints (B^T B - I)_{ab} = 0 for a <= b on a block B of the matrix.

    ``rows``/``cols`` select the block (defaults: everything).  Analytic
    gradients and second derivatives: the constraints are quadratic.
    """
    n, m = shape
    r0, r1 = rows if rows is not None else (0, n)
    c0, c1 = cols if cols is not None else (0, m)
    p = c1 - c0

    def block(x):
        return x[..., r0:r1, c0:c1]

    out = []
    for a in range(p):
        for b in range(a, p):
            def value(x, a=a, b=b):
                bl = block(x)
                v = np.sum(bl[..., :, a] * bl[..., :, b], axis=-1)
                return v - (1.0 if a == b else 0.0)

            def grad(x, a=a, b=b):
                bl = block(x)
                g = np.zeros(np.shape(x))
                ga = np.zeros(bl.shape)
                ga[..., :, a] += bl[..., :, b]
                ga[..., :, b] += bl[..., :, a]
                g[..., r0:r1, c0:c1] = ga
                return g

            def hess(x, u, v, a=a, b=b):
                ub = u[..., r0:r1, c0:c1]
                vb = v[..., r0:r1, c0:c1]
                return np.sum(ub[..., :, a] * vb[..., :, b], axis=-1) + np.sum(
                    vb[..., :, a] * ub[..., :, b], axis=-1
                )

            out.append(Constraint(value=value, grad=grad, hess=hess))
    return tuple(out)


def fixed_entry_constraints(
    shape: tuple[int, int], entries: list[tuple[int, int, float]]
) -> tuple[Constraint, ...]:
    """Linear constraints x_ij = target (zero Hessian)."""
    out = []
    for (i, j, target) in entries:
        def value(x, i=i, j=j, target=target):
            return x[..., i, j] - target

        def grad(x, i=i, j=j):
            g = np.zeros(np.shape(x))
            g[..., i, j] = 1.0
            return g

        def hess(x, u, v):
            return np.zeros(np.broadcast(u, v).shape[:-2])

        out.append(Constraint(value=value, grad=grad, hess=hess))
    return tuple(out)


def symmetry_constraints(n: int) -> tuple[Constraint, ...]:
    """Linear constraints x_ab = x_ba for a < b."""
    out = []
    for a in range(n):
        for b in range(a + 1, n):
            def value(x, a=a, b=b):
                return x[..., a, b] - x[..., b, a]

            def grad(x, a=a, b=b):
                g = np.zeros(np.shape(x))
                g[..., a, b] = 1.0
                g[..., b, a] = -1.0
                return g

            def hess(x, u, v):
                return np.zeros(np.broadcast(u, v).shape[:-2])

            out.append(Constraint(value=value, grad=grad, hess=hess))
    return tuple(out)
