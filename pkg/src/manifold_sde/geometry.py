"""Geometry surface shared by all manifold families.

A manifold embedded in a matrix space E = R^{n x m} is described by a
:class:`ManifoldHandle`: a bundle of closed-form callables (metric, metric
inverse, tangent projection, Christoffel function, diffusion factor sigma,
constraint residuals, tubular retraction, Brownian drifts) plus shape and
dimension metadata.  Every callable broadcasts over leading batch axes, so the
same handle serves both pointwise checks and vectorized path simulation.

On top of a handle this module provides the generic machinery that does not
depend on the family: consistency checks (projection, metric compatibility),
ambient-basis formulas for the Brownian drift and the Laplace-Beltrami
operator, second-order-tangent residuals for invariance testing, tangent
frames with metric-dual partners, and the construction of second-order
retractions from tubular ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .linalg import frobenius_inner, frobenius_norm, mT
from .rng import RngStream

_EPS = np.finfo(float).eps


class OffManifoldError(ValueError):
    """A point violates the manifold's constraints or domain checks."""


class FrameConditionError(RuntimeError):
    """Projected ambient basis is too degenerate to build a tangent frame."""


class RetractionDomainError(RuntimeError):
    """A proposed point left the retraction's domain of definition."""


# ---------------------------------------------------------------------------
# basic types


@dataclass(frozen=True)
class Constraint:
    """A scalar constraint c: E -> R cut out by the embedding.

    ``value`` maps ``(..., n, m)`` to ``(...)``.  ``grad`` returns the ambient
    gradient matrix and ``hess`` the second derivative c''(x)[u, v] as a
    scalar; both fall back to central finite differences when omitted (with
    correspondingly lower accuracy).
    """

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None = None

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.grad is not None:
            return self.grad(x)
        return _fd_constraint_grad(self.value, x)

    def second(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.hess is not None:
            return self.hess(x, u, v)
        return _fd_constraint_hess(self.value, x, u, v)


@dataclass(frozen=True)
class TubularRetraction:
    """Nearest-point style map from a neighborhood of the manifold onto it.

    ``mapping`` sends ambient points to manifold points; ``differential`` is
    its derivative at on-manifold points (closed form when available,
    otherwise use :func:`tubular_differential`); ``domain`` returns a boolean
    mask of points where ``mapping`` is defined.
    """

    mapping: Callable[[np.ndarray], np.ndarray]
    differential: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    domain: Callable[[np.ndarray], np.ndarray] | None = None

    def in_domain(self, q: np.ndarray) -> np.ndarray:
        if self.domain is None:
            return np.ones(q.shape[:-2], dtype=bool)
        return np.asarray(self.domain(q))

    def apply(self, q: np.ndarray) -> np.ndarray:
        ok = self.in_domain(q)
        if not np.all(ok):
            raise RetractionDomainError(
                f"{int(np.size(ok) - np.count_nonzero(ok))} point(s) left the "
                "retraction domain"
            )
        return self.mapping(q)


@dataclass(frozen=True)
class TangentRetraction:
    """Tangent-vector retraction r(x, v) with optional second derivative.

    ``second_derivative`` evaluates d^2/dt^2 r(x, tv)|_0 polarized to a
    bilinear form in (v, w); when absent a finite-difference evaluation is
    used.  For a second-order retraction this equals -Gamma(x; v, w).
    """

    mapping: Callable[[np.ndarray, np.ndarray], np.ndarray]
    second_derivative: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray] | None = None
    domain: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def in_domain(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.domain is None:
            return np.ones(np.broadcast(x, v).shape[:-2], dtype=bool)
        return np.asarray(self.domain(x, v))


@dataclass(frozen=True)
class SecondOrderTangent:
    """Second-order tangent data (A, M): drift vector plus symmetric diffusion operator.

    ``m_apply`` applies M to ambient matrices and must broadcast over leading
    axes.  The pair is tangent to the constraint set when, for every scalar
    constraint c, ``tr(c'' M) + c'(A) = 0`` and ``c' M = 0``; see
    :func:`soo_residual`.
    """

    a: np.ndarray
    m_apply: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SdeSpec:
    """An ambient-space SDE dX = mu dt + sigma(X) dW in Ito or Stratonovich form.

    ``sigma`` maps a noise increment of shape ``noise_shape`` to an ambient
    matrix.  ``diffusion`` records the generator scale c (generator = c *
    Laplace-Beltrami) when the SDE was built as a Riemannian Brownian motion;
    it is ``None`` for hand-rolled SDEs.
    """

    form: str
    drift: Callable[[np.ndarray, float], np.ndarray]
    sigma: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    noise_shape: tuple[int, ...]
    diffusion: float | None = None

    def __post_init__(self) -> None:
        if self.form not in ("ito", "stratonovich"):
            raise ValueError(f"SdeSpec.form must be 'ito' or 'stratonovich', got {self.form!r}")


@dataclass(frozen=True)
class ManifoldHandle:
    """Closed-form geometry of one embedded matrix manifold.

    All callables take points/vectors of shape ``(..., n, m)`` and broadcast
    over the leading axes.  ``christoffel`` is the bilinear extension of the
    Christoffel function: symmetric in its two vector arguments and smooth in
    a neighborhood of the manifold.  ``ito_drift`` / ``strat_drift`` are the
    standard-speed Brownian drifts (generator = Laplace-Beltrami / 2).
    """

    name: str
    shape: tuple[int, int]
    dim: int
    metric: Callable[[np.ndarray, np.ndarray], np.ndarray]
    metric_inv: Callable[[np.ndarray, np.ndarray], np.ndarray]
    project: Callable[[np.ndarray, np.ndarray], np.ndarray]
    christoffel: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sigma_t: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tubular: TubularRetraction
    ito_drift: Callable[[np.ndarray], np.ndarray]
    strat_drift: Callable[[np.ndarray], np.ndarray]
    random_point: Callable[[RngStream], np.ndarray]
    default_point: Callable[[], np.ndarray]
    constraints: tuple[Constraint, ...] = ()
    in_domain: Callable[[np.ndarray], np.ndarray] | None = None
    compact: bool = False
    cost_point: Callable[[np.ndarray], np.ndarray] | None = None
    lie: Any = None
    params: Mapping[str, Any] = field(default_factory=dict)

    # -- conveniences -------------------------------------------------------

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        """Stack of constraint residuals, shape ``(..., n_constraints)``."""
        x = np.asarray(x, dtype=float)
        if not self.constraints:
            return np.zeros(x.shape[:-2] + (0,))
        return np.stack([c.value(x) for c in self.constraints], axis=-1)

    def constraint_residual(self, x: np.ndarray) -> np.ndarray:
        vals = self.constraint_values(x)
        if vals.shape[-1] == 0:
            return np.zeros(vals.shape[:-1])
        return np.max(np.abs(vals), axis=-1)

    def domain_ok(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.in_domain is None:
            return np.ones(x.shape[:-2], dtype=bool)
        return np.asarray(self.in_domain(x))

    def on_manifold(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        return (self.constraint_residual(x) <= tol) & self.domain_ok(x)

    def random_tangent(self, rng: RngStream, x: np.ndarray) -> np.ndarray:
        return self.project(x, rng.normal(np.shape(x)))

    def functional_point(self, x: np.ndarray) -> np.ndarray:
        """Representation cost functionals act on (identity unless overridden)."""
        if self.cost_point is None:
            return x
        return self.cost_point(x)


def require_on_manifold(handle: ManifoldHandle, x: np.ndarray, tol: float = 1e-9) -> None:
    ok = handle.on_manifold(x, tol)
    if not np.all(ok):
        worst = float(np.max(handle.constraint_residual(x)))
        raise OffManifoldError(
            f"{handle.name}: point is off-manifold (max constraint residual "
            f"{worst:.3e}, tolerance {tol:.1e}, or domain check failed)"
        )


# ---------------------------------------------------------------------------
# finite differences


def default_fd_step(x: np.ndarray) -> float:
    """Default central-difference step: sqrt(machine eps) * (1 + |x|_F)."""
    return float(np.sqrt(_EPS) * (1.0 + np.max(frobenius_norm(x))))


def _fd_constraint_grad(value, x: np.ndarray, step: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = step if step is not None else default_fd_step(x)
    basis = ambient_basis(x.shape[-2:])
    xp = x[None] + h * basis
    xm = x[None] - h * basis
    comp = (value(xp) - value(xm)) / (2.0 * h)
    return comp.reshape(x.shape[-2:])


def _fd_constraint_hess(value, x, u, v, step: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = np.maximum(frobenius_norm(u), 1e-300)[..., None, None]
    nv = np.maximum(frobenius_norm(v), 1e-300)[..., None, None]
    uu = u / nu
    vv = v / nv
    h = step if step is not None else float(_EPS ** 0.25 * (1.0 + np.max(frobenius_norm(x))))
    pp = value(x + h * (uu + vv))
    pm = value(x + h * (uu - vv))
    mp = value(x - h * (uu - vv))
    mm = value(x - h * (uu + vv))
    raw = (pp - pm - mp + mm) / (4.0 * h * h)
    return raw * nu[..., 0, 0] * nv[..., 0, 0]


def ambient_basis(shape: tuple[int, int]) -> np.ndarray:
    """Standard basis of R^{n x m} stacked as an ``(n*m, n, m)`` array."""
    n, m = shape
    return np.eye(n * m).reshape(n * m, n, m)


# ---------------------------------------------------------------------------
# consistency checks


@dataclass(frozen=True)
class ProjectionReport:
    max_idempotency: float
    max_asymmetry: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_idempotency < self.tol and self.max_asymmetry < self.tol


def check_projection(
    handle: ManifoldHandle,
    x: np.ndarray,
    trials: int = 10,
    rng: RngStream | None = None,
    tol: float = 1e-9,
) -> ProjectionReport:
    """Check that Pi(x) is idempotent and Pi g^{-1} is self-adjoint at ``x``.

    Draws ``trials`` unit-norm ambient directions; the reported numbers are
    the worst-case residuals over the draws.
    """
    require_on_manifold(handle, x)
    rng = rng if rng is not None else RngStream(0, 0)
    n, m = handle.shape
    max_idem = 0.0
    max_asym = 0.0
    for _ in range(trials):
        w = rng.normal((n, m))
        w /= frobenius_norm(w)
        pw = handle.project(x, w)
        max_idem = max(max_idem, float(frobenius_norm(handle.project(x, pw) - pw)))
        w2 = rng.normal((n, m))
        w2 /= frobenius_norm(w2)
        lhs = frobenius_inner(w2, handle.project(x, handle.metric_inv(x, w)))
        rhs = frobenius_inner(w, handle.project(x, handle.metric_inv(x, w2)))
        max_asym = max(max_asym, float(abs(lhs - rhs)))
    return ProjectionReport(max_idempotency=max_idem, max_asymmetry=max_asym, tol=tol)


def check_metric_compatibility(
    handle: ManifoldHandle,
    x: np.ndarray,
    step: float = 1e-5,
    trials: int = 10,
    rng: RngStream | None = None,
) -> float:
    """Finite-difference metric-compatibility residual of the connection.

    For tangent fields Y(y) = Pi(y) w extended by projection and a tangent
    direction xi, compares d/dt <Y, Y>_g along x + t xi against
    2 <Y, D_xi Y + Gamma(xi, Y)>_g.  Returns the worst residual over draws.
    """
    rng = rng if rng is not None else RngStream(0, 0)
    n, m = handle.shape
    worst = 0.0
    for _ in range(trials):
        w = rng.normal((n, m))
        w /= frobenius_norm(w)
        xi = handle.project(x, rng.normal((n, m)))
        nxi = float(frobenius_norm(xi))
        if nxi < 1e-12:
            continue
        xi = xi / nxi

        def field(y):
            return handle.project(y, w)

        def sq_norm(y):
            fy = field(y)
            return float(frobenius_inner(fy, handle.metric(y, fy)))

        xp = x + step * xi
        xm = x - step * xi
        lhs = (sq_norm(xp) - sq_norm(xm)) / (2.0 * step)
        dy = (field(xp) - field(xm)) / (2.0 * step)
        y0 = field(x)
        nabla = dy + handle.christoffel(x, xi, y0)
        rhs = 2.0 * float(frobenius_inner(y0, handle.metric(x, nabla)))
        worst = max(worst, abs(lhs - rhs))
    return worst


# ---------------------------------------------------------------------------
# Brownian drifts and the Laplacian, via the ambient basis


def laplace_drift_vector(handle: ManifoldHandle, x: np.ndarray) -> np.ndarray:
    """-sum_i Gamma(x; e_i, Pi g^{-1} e_i) over the standard ambient basis."""
    basis = ambient_basis(handle.shape)
    if np.ndim(x) > 2:
        basis = basis.reshape((basis.shape[0],) + (1,) * (np.ndim(x) - 2) + handle.shape)
    w = handle.project(x, handle.metric_inv(x, basis))
    return -np.sum(handle.christoffel(x, basis, w), axis=0)


def brownian_ito_drift(handle: ManifoldHandle, x: np.ndarray) -> np.ndarray:
    """Ito drift of standard Brownian motion: -1/2 sum_i Gamma(x; e_i, Pi g^{-1} e_i).

    This is the generic ambient-basis evaluation; handles also carry the
    closed-form equivalent as ``handle.ito_drift``, and the two must agree.
    """
    require_on_manifold(handle, x)
    return 0.5 * laplace_drift_vector(handle, x)


def brownian_strat_drift(
    handle: ManifoldHandle, x: np.ndarray, step: float | None = None
) -> np.ndarray:
    """Stratonovich drift -1/2 sum_i nabla_{Pi sigma e_i}(Pi sigma e_i).

    The directional derivative of each field y -> Pi(y) sigma(y) e_i is taken
    by central differences along its own direction, then corrected by the
    Christoffel term.  Handles carry closed forms as ``handle.strat_drift``.
    """
    require_on_manifold(handle, x)
    basis = ambient_basis(handle.shape)
    u = handle.project(x, handle.sigma(x, basis))
    norms = frobenius_norm(u)
    safe = np.maximum(norms, 1e-300)[..., None, None]
    h0 = step if step is not None else default_fd_step(x)
    h = h0 / safe
    xb = np.broadcast_to(x, u.shape)
    fp = handle.project(xb + h * u, handle.sigma(xb + h * u, basis))
    fm = handle.project(xb - h * u, handle.sigma(xb - h * u, basis))
    d_term = (fp - fm) / (2.0 * h)
    d_term = np.where((norms > 1e-14)[..., None, None], d_term, 0.0)
    gamma_term = handle.christoffel(x, u, u)
    return -0.5 * np.sum(d_term + gamma_term, axis=0)


def laplace_beltrami(
    handle: ManifoldHandle,
    x: np.ndarray,
    egrad: np.ndarray,
    ehess: Callable[[np.ndarray], np.ndarray],
) -> float:
    """Laplace-Beltrami operator applied to a function given by ambient derivatives.

    ``egrad`` is the ambient gradient matrix at ``x``; ``ehess`` applies the
    ambient Hessian to matrices (and must broadcast over a stacked basis).
    Evaluates egrad . (-sum_i Gamma(e_i, Pi g^{-1} e_i)) +
    sum_i <e_i, Pi g^{-1} ehess(e_i)>.
    """
    require_on_manifold(handle, x)
    drift_vec = laplace_drift_vector(handle, x)
    basis = ambient_basis(handle.shape)
    hbasis = ehess(basis)
    trace = np.sum(frobenius_inner(basis, handle.project(x, handle.metric_inv(x, hbasis))))
    return float(frobenius_inner(egrad, drift_vec) + trace)


def soo_residual(handle: ManifoldHandle, x: np.ndarray, sot: SecondOrderTangent) -> float:
    """Worst violation of the second-order tangency conditions at ``x``.

    For each scalar constraint c the pair (A, M) must satisfy
    tr(c''(x) M) + c'(x) A = 0 and c'(x) M = 0; the residual is the max of
    |tr(c'' M) + c' A| and |M grad c|_F over constraints (0 when there are
    none).
    """
    if not handle.constraints:
        return 0.0
    basis = ambient_basis(handle.shape)
    mb = sot.m_apply(basis)
    worst = 0.0
    for c in handle.constraints:
        tr = float(np.sum(c.second(x, basis, mb)))
        grad = c.gradient(x)
        lin = float(frobenius_inner(grad, sot.a))
        cross = float(frobenius_norm(sot.m_apply(grad)))
        worst = max(worst, abs(tr + lin), cross)
    return worst


def brownian_soo(
    handle: ManifoldHandle, x: np.ndarray, diffusion: float = 0.5
) -> SecondOrderTangent:
    """The second-order tangent pair (2 mu, sigma sigma^T) of Brownian motion."""
    c2 = 2.0 * diffusion

    def m_apply(w):
        return c2 * handle.project(x, handle.metric_inv(x, w))

    return SecondOrderTangent(a=2.0 * c2 * handle.ito_drift(x), m_apply=m_apply)


# ---------------------------------------------------------------------------
# tangent frames


def dual_tangent_frame(handle: ManifoldHandle, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """A tangent frame plus its metric-dual partner at ``x``.

    Projects the ambient basis, diagonalizes the Gram matrix under the
    g-pairing and keeps the top ``dim`` directions, normalized so that
    <v_i, g v_j> = delta_ij.  The frame is then self-dual; the dual list is
    returned separately to keep call sites honest about which slot pairs with
    which.
    """
    basis = ambient_basis(handle.shape)
    cand = handle.project(x, basis)
    gc = handle.metric(x, cand)
    gram = np.einsum("aij,bij->ab", cand, gc)
    vals, vecs = np.linalg.eigh(gram)
    d = handle.dim
    if d > gram.shape[0]:
        raise FrameConditionError(
            f"{handle.name}: dim {d} exceeds ambient dimension {gram.shape[0]}"
        )
    kept = vals[-d:]
    vmax = float(vals[-1])
    if vmax <= 0.0 or float(kept[0]) < 1e-8 * vmax:
        raise FrameConditionError(
            f"{handle.name}: frame condition {vmax / max(float(kept[0]), 1e-300):.3e} "
            "exceeds 1e8"
        )
    if d < gram.shape[0] and float(vals[-d - 1]) > 1e-6 * vmax:
        # spillover mass outside the tangent space means dim metadata is wrong
        raise FrameConditionError(
            f"{handle.name}: projected basis spans more than dim={d} directions"
        )
    coeff = vecs[:, -d:] / np.sqrt(kept)
    frame = np.einsum("ak,aij->kij", coeff, cand)
    gframe = handle.metric(x, frame)
    gram_check = np.einsum("aij,bij->ab", frame, gframe)
    if float(np.max(np.abs(gram_check - np.eye(d)))) > 1e-10:
        raise FrameConditionError(f"{handle.name}: frame failed dual-pairing verification")
    return frame, frame.copy()


# ---------------------------------------------------------------------------
# retractions


def tubular_differential(
    retraction: TubularRetraction,
    x: np.ndarray,
    w: np.ndarray,
    step: float | None = None,
) -> np.ndarray:
    """Differential of a tubular retraction at an on-manifold point.

    Uses the closed form when the retraction carries one, otherwise a central
    difference along ``w``.
    """
    if retraction.differential is not None:
        return retraction.differential(x, w)
    w = np.asarray(w, dtype=float)
    nw = np.maximum(frobenius_norm(w), 1e-300)[..., None, None]
    h = (step if step is not None else default_fd_step(x)) / nw
    return (retraction.mapping(x + h * w) - retraction.mapping(x - h * w)) / (2.0 * h)


def second_order_retraction(
    handle: ManifoldHandle, retraction: TubularRetraction | None = None
) -> TangentRetraction:
    """Build the curvature-corrected tangent retraction from a tubular one.

    r(x, v) = pi(x + v - 1/2 pi'(x) Gamma(x; v, v)).  Its second derivative
    at zero is -Gamma(x; v, w), which is what makes the retraction
    second-order and kills the drift adjustment for Brownian increments.
    """
    tub = retraction if retraction is not None else handle.tubular

    def mapping(x, v):
        corr = tubular_differential(tub, x, handle.christoffel(x, v, v))
        return tub.mapping(x + v - 0.5 * corr)

    def second(x, v, w):
        return -handle.christoffel(x, v, w)

    def domain(x, v):
        corr = tubular_differential(tub, x, handle.christoffel(x, v, v))
        return tub.in_domain(x + v - 0.5 * corr)

    return TangentRetraction(mapping=mapping, second_derivative=second, domain=domain)


def first_order_retraction(tub: TubularRetraction) -> TangentRetraction:
    """The naive tangent retraction r(x, v) = pi(x + v) with FD second derivative."""
    return TangentRetraction(
        mapping=lambda x, v: tub.mapping(x + v),
        second_derivative=None,
        domain=lambda x, v: tub.in_domain(x + v),
    )


def retraction_second_derivative(
    retraction: TangentRetraction,
    x: np.ndarray,
    v: np.ndarray,
    w: np.ndarray | None = None,
    step: float | None = None,
) -> np.ndarray:
    """Evaluate r''(x, 0)[v, w] (closed form or symmetric finite differences)."""
    if retraction.second_derivative is not None:
        return retraction.second_derivative(x, v, w if w is not None else v)
    if w is None or w is v:
        return _fd_retraction_diag(retraction, x, v, step)
    plus = _fd_retraction_diag(retraction, x, v + w, step)
    minus = _fd_retraction_diag(retraction, x, v - w, step)
    return 0.25 * (plus - minus)


def _fd_retraction_diag(retraction, x, v, step=None):
    v = np.asarray(v, dtype=float)
    nv = np.maximum(frobenius_norm(v), 1e-300)[..., None, None]
    u = v / nv
    h = step if step is not None else float(_EPS ** 0.25 * (1.0 + np.max(frobenius_norm(x))))
    xb = np.broadcast_to(x, u.shape) if u.ndim > np.ndim(x) else x
    second = (retraction.mapping(xb, h * u) - 2.0 * xb + retraction.mapping(xb, -h * u)) / (h * h)
    return second * nv * nv


# ---------------------------------------------------------------------------
# Brownian SDE construction


def brownian_sde(
    handle: ManifoldHandle,
    form: str = "ito",
    diffusion: float = 0.5,
    lie_frame_noise: bool = False,
) -> SdeSpec:
    """The Riemannian Brownian motion on ``handle`` with generator c * Laplacian.

    ``diffusion`` is the generator scale c; the classical Brownian motion
    (generator Laplacian/2) is c = 1/2.  Drift and noise scale as 2c and
    sqrt(2c).  With ``lie_frame_noise`` the noise lives in the Lie algebra
    (dimension dim g instead of n*m) and is pushed to the tangent space by
    left translation; this is only available on group handles and is
    equivalent in law.
    """
    if diffusion <= 0.0:
        raise ValueError(f"diffusion must be positive, got {diffusion}")
    if form not in ("ito", "stratonovich"):
        raise ValueError(f"form must be 'ito' or 'stratonovich', got {form!r}")
    c2 = 2.0 * diffusion
    root = float(np.sqrt(c2))

    if form == "ito":
        def drift(x, t):
            return c2 * handle.ito_drift(x)
    else:
        def drift(x, t):
            return c2 * handle.strat_drift(x)

    if lie_frame_noise:
        if handle.lie is None:
            raise ValueError(f"{handle.name}: lie_frame_noise requires a group handle")
        structure = handle.lie
        frame = structure.orthonormal_frame()  # (k, n, n), I-orthonormal in g

        def sigma(x, dw, t):
            alg = np.einsum("...k,kij->...ij", dw, frame)
            return root * (x @ alg)

        noise_shape: tuple[int, ...] = (frame.shape[0],)
    else:
        def sigma(x, dw, t):
            return root * handle.project(x, handle.sigma(x, dw))

        noise_shape = handle.shape

    return SdeSpec(form=form, drift=drift, sigma=sigma, noise_shape=noise_shape,
                   diffusion=diffusion)
