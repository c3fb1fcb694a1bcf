"""One-step schemes that keep SDE paths on an embedded matrix manifold.

Five schemes, selected by string id:

- ``ito-em``:        projected Euler-Maruyama on the Ito form,
- ``strat-heun``:    projected Euler-Heun predictor/corrector (Stratonovich),
- ``geodesic-walk``: normalized geodesic random walk through a second-order
                     tangent retraction,
- ``retractive-em``: Euler-Maruyama through a tangent retraction, drift
                     adjusted by the retraction's second-order term,
- ``rk4-geodesic``:  geodesic walk whose exponential map is integrated by a
                     projected Runge-Kutta pass over the geodesic equation.

The projected and retractive schemes consume componentwise-truncated Gaussian
increments, clamped at A_h = sqrt(2 r |ln h|), which keeps intermediate
points inside the retraction domain with overwhelming probability.  The
geodesic schemes normalize the move length, so they use the raw increments.

Steppers are pure functions of (state, increment) and broadcast over leading
batch axes.  Rows whose step leaves the retraction domain are frozen at the
previous state and flagged in ``StepResult.ok``; the caller decides whether
to resample those increments (the simulation harness retries a few times
from the path's own stream before giving up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    ManifoldHandle,
    SdeSpec,
    TangentRetraction,
    brownian_sde,
    retraction_second_derivative,
    second_order_retraction,
)
from .rng import RngStream

INTEGRATOR_IDS = ("ito-em", "strat-heun", "geodesic-walk", "retractive-em", "rk4-geodesic")


class IntegratorParameterError(ValueError):
    pass


class StepFailureError(RuntimeError):
    """A path could not complete a step inside the retraction domain."""


class DivergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# increments


def truncation_bound(h: float, r: float = 1.0) -> float:
    """The clamp level A_h = sqrt(2 r |ln h|) for step size h in (0, 1)."""
    if not 0.0 < h < 1.0:
        raise IntegratorParameterError(
            f"truncation needs a step size in (0, 1), got h={h}"
        )
    if r < 1.0:
        raise IntegratorParameterError(f"truncation parameter r must be >= 1, got {r}")
    return math.sqrt(2.0 * r * abs(math.log(h)))


@dataclass(frozen=True)
class WienerIncrement:
    """Raw and clamped standard-normal draws for one time step."""

    raw: np.ndarray
    truncated: np.ndarray
    h: float
    r: float

    @property
    def bound(self) -> float:
        return truncation_bound(self.h, self.r)


def truncated_increment(rng: RngStream, k, h: float, r: float = 1.0) -> WienerIncrement:
    """Draw i.i.d. standard normals of shape ``k`` and clamp them at +-A_h."""
    shape = (k,) if isinstance(k, int) else tuple(k)
    bound = truncation_bound(h, r)
    raw = rng.normal(shape)
    return WienerIncrement(
        raw=raw, truncated=np.clip(raw, -bound, bound), h=float(h), r=float(r)
    )


# ---------------------------------------------------------------------------
# step results and masking helpers


@dataclass(frozen=True)
class StepResult:
    """Next state plus feasibility diagnostics.

    ``ok`` flags batch rows whose proposal stayed inside the retraction
    domain; failed rows carry the previous state.  ``residual`` is the
    largest constraint violation among the ok rows after retraction.
    """

    state: np.ndarray
    ok: np.ndarray
    residual: float
    retries: int = 0

    def require_ok(self) -> np.ndarray:
        if not bool(np.all(self.ok)):
            raise StepFailureError(
                "step left the retraction domain; resample the increment"
            )
        return self.state


def _finite_rows(q: np.ndarray) -> np.ndarray:
    return np.isfinite(q).all(axis=(-2, -1))


def _freeze(q: np.ndarray, x: np.ndarray, keep: np.ndarray) -> np.ndarray:
    if np.all(keep):
        return q
    return np.where(keep[..., None, None], q, np.broadcast_to(x, q.shape))


def _feasibility(handle: ManifoldHandle, state: np.ndarray, ok: np.ndarray) -> float:
    res = handle.constraint_residual(state)
    return float(np.max(np.where(ok, res, 0.0)))


def _project_step(handle, x, q, ok_in=None) -> StepResult:
    """Pull an ambient proposal back through the tubular retraction."""
    ok = _finite_rows(q) if ok_in is None else _finite_rows(q) & ok_in
    q = _freeze(q, x, ok)
    ok = ok & handle.tubular.in_domain(q)
    state = handle.tubular.mapping(_freeze(q, x, ok))
    return StepResult(state=state, ok=ok, residual=_feasibility(handle, state, ok))


def _retract_step(handle, retraction, x, v, ok_in=None) -> StepResult:
    ok = _finite_rows(v) if ok_in is None else _finite_rows(v) & ok_in
    v = np.where(ok[..., None, None], v, 0.0)
    ok = ok & retraction.in_domain(x, v)
    v = np.where(ok[..., None, None], v, 0.0)
    state = retraction.mapping(x, v)
    return StepResult(state=state, ok=ok, residual=_feasibility(handle, state, ok))


# ---------------------------------------------------------------------------
# projected Euler schemes


def step_ito_projected(handle, sde, x, t, h, inc) -> StepResult:
    """pi(x + h mu + sqrt(h) sigma zeta) with the truncated increment."""
    if sde.form != "ito":
        raise IntegratorParameterError("projected Euler-Maruyama needs an Ito-form SDE")
    x = np.asarray(x, dtype=float)
    q = x + h * sde.drift(x, t) + math.sqrt(h) * sde.sigma(x, inc.truncated, t)
    return _project_step(handle, x, q)


def step_stratonovich_heun_projected(handle, sde, x, t, h, inc) -> StepResult:
    """Predictor/corrector: pi(x + h mu_S + sqrt(h)/2 (sigma(x) + sigma(pred)) zeta)."""
    if sde.form != "stratonovich":
        raise IntegratorParameterError("Euler-Heun needs a Stratonovich-form SDE")
    x = np.asarray(x, dtype=float)
    zeta = inc.truncated
    rooth = math.sqrt(h)
    s0 = sde.sigma(x, zeta, t)
    pred = x + rooth * s0
    ok_pred = _finite_rows(pred)
    pred = _freeze(pred, x, ok_pred)
    ok_pred = ok_pred & handle.tubular.in_domain(pred)
    pred = _freeze(pred, x, ok_pred)
    s1 = sde.sigma(pred, zeta, t)
    q = x + h * sde.drift(x, t) + 0.5 * rooth * (s0 + s1)
    return _project_step(handle, x, q, ok_in=ok_pred)


# ---------------------------------------------------------------------------
# retraction-based schemes


def _noise_basis(sde: SdeSpec, batch_ndim: int) -> np.ndarray:
    size = int(np.prod(sde.noise_shape))
    return np.eye(size).reshape((size,) + (1,) * batch_ndim + tuple(sde.noise_shape))


def mu_retraction_adjusted(handle, sde, retraction, x, t) -> np.ndarray:
    """mu minus half the sum of r''(x; sigma w_j, sigma w_j) over noise axes.

    The adjustment puts the one-step mean of a retracted Euler step back on
    the SDE's drift; for Brownian SDEs with a second-order retraction it
    vanishes identically.
    """
    x = np.asarray(x, dtype=float)
    basis = _noise_basis(sde, x.ndim - 2)
    fields = sde.sigma(x, basis, t)
    second = retraction_second_derivative(retraction, x, fields)
    return sde.drift(x, t) - 0.5 * np.sum(second, axis=0)


def step_retractive_em(handle, sde, retraction, x, t, h, inc) -> StepResult:
    """r(x, h mu_r + sqrt(h) sigma zeta) through a tangent retraction."""
    if sde.form != "ito":
        raise IntegratorParameterError("retractive Euler-Maruyama needs an Ito-form SDE")
    x = np.asarray(x, dtype=float)
    v = h * mu_retraction_adjusted(handle, sde, retraction, x, t)
    v = v + math.sqrt(h) * sde.sigma(x, inc.truncated, t)
    return _retract_step(handle, retraction, x, v)


def _normalized_move(handle, sde, x, raw, t, length2):
    """Rescale sigma(x) xi to squared metric length ``length2`` (rowwise)."""
    u = sde.sigma(x, raw, t)
    norm2 = np.sum(u * handle.metric(x, u), axis=(-2, -1))
    good = np.isfinite(norm2) & (norm2 > 0.0)
    scale = np.sqrt(length2 / np.where(good, norm2, 1.0))
    v = np.where(good[..., None, None], scale[..., None, None] * u, 0.0)
    return v, good


def step_geodesic_walk(handle, sde, retraction, x, h, inc, t=0.0) -> StepResult:
    """Geodesic random walk: r(x, v) with v = sigma zeta rescaled to metric
    length sqrt(2 c h d), d = dim of the manifold, c the generator scale.

    Raw (untruncated) increments are used since the move length is fixed by
    the normalization.  A zero noise vector (probability zero) is flagged for
    resampling.
    """
    if sde.diffusion is None:
        raise IntegratorParameterError(
            "geodesic walk needs a Brownian SDE carrying its generator scale"
        )
    x = np.asarray(x, dtype=float)
    length2 = 2.0 * sde.diffusion * float(h) * handle.dim
    v, good = _normalized_move(handle, sde, x, inc.raw, t, length2)
    return _retract_step(handle, retraction, x, v, ok_in=good)


# ---------------------------------------------------------------------------
# geodesic equation by Runge-Kutta


def _geodesic_field(handle, x, v):
    return v, -handle.christoffel(x, v, v)


def _rk4_geodesic_masked(handle, x, v, T, steps, tubular=None):
    tub = tubular if tubular is not None else handle.tubular
    hstep = float(T) / int(steps)
    vnorm0 = np.sqrt(np.sum(v * v, axis=(-2, -1)))
    vcap = 1e6 * max(1.0, float(np.max(vnorm0)) if vnorm0.size else 1.0)
    ok = np.ones(np.broadcast(x, v).shape[:-2], dtype=bool)
    x = np.broadcast_to(x, np.broadcast(x, v).shape).astype(float)
    v = np.broadcast_to(v, x.shape).astype(float)
    for _ in range(int(steps)):
        k1x, k1v = _geodesic_field(handle, x, v)
        k2x, k2v = _geodesic_field(handle, x + 0.5 * hstep * k1x, v + 0.5 * hstep * k1v)
        k3x, k3v = _geodesic_field(handle, x + 0.5 * hstep * k2x, v + 0.5 * hstep * k2v)
        k4x, k4v = _geodesic_field(handle, x + hstep * k3x, v + hstep * k3v)
        xn = x + (hstep / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        vn = v + (hstep / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        good = _finite_rows(xn) & _finite_rows(vn)
        xn = _freeze(xn, x, good)
        vn = _freeze(vn, v, good)
        good = good & tub.in_domain(xn)
        x = tub.mapping(_freeze(xn, x, good))
        v = handle.project(x, _freeze(vn, v, good))
        good = good & (np.sqrt(np.sum(v * v, axis=(-2, -1))) <= vcap)
        ok = ok & good
    return x, v, ok


def integrate_geodesic_rk4_projected(handle, x, v, T, steps, tubular=None):
    """Classical RK4 on d/dt (x, v) = (v, -Gamma(x; v, v)), re-projected.

    After every step the point is pulled back by the tubular retraction and
    the velocity re-projected onto the tangent space, giving a numerical
    exponential map.  Raises DivergenceError on blow-up (velocity growth
    beyond 1e6) or a retraction-domain exit.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    point, velocity, ok = _rk4_geodesic_masked(handle, x, v, T, steps, tubular)
    if not bool(np.all(ok)):
        raise DivergenceError(
            "geodesic integration blew up or left the retraction domain"
        )
    return point, velocity


def step_rk4_geodesic(handle, sde, x, h, inc, t=0.0, substeps: int = 2) -> StepResult:
    """Geodesic-walk step whose exponential map is RK4-integrated."""
    if sde.diffusion is None:
        raise IntegratorParameterError(
            "rk4 geodesic walk needs a Brownian SDE carrying its generator scale"
        )
    x = np.asarray(x, dtype=float)
    length2 = 2.0 * sde.diffusion * float(h) * handle.dim
    v, good = _normalized_move(handle, sde, x, inc.raw, t, length2)
    state, _, ok = _rk4_geodesic_masked(handle, x, v, 1.0, substeps)
    ok = ok & good
    state = _freeze(state, x, ok)
    return StepResult(state=state, ok=ok, residual=_feasibility(handle, state, ok))


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Stepper:
    """An integrator id bound to one handle and SDE, ready to advance paths."""

    integrator_id: str
    handle: ManifoldHandle
    sde: SdeSpec
    uses_truncation: bool
    step: Callable[[np.ndarray, float, float, WienerIncrement], StepResult]

    @property
    def noise_shape(self) -> tuple:
        return tuple(self.sde.noise_shape)


def integrator_form(integrator_id: str) -> str:
    """The SDE form ('ito' or 'stratonovich') an integrator consumes."""
    if integrator_id not in INTEGRATOR_IDS:
        raise IntegratorParameterError(
            f"unknown integrator {integrator_id!r}; valid ids: {', '.join(INTEGRATOR_IDS)}"
        )
    return "stratonovich" if integrator_id == "strat-heun" else "ito"


def make_stepper(
    handle: ManifoldHandle,
    integrator_id: str,
    sde: SdeSpec | None = None,
    diffusion: float = 0.5,
    retraction: TangentRetraction | None = None,
    rk4_substeps: int = 2,
) -> Stepper:
    """Bind an integrator id to a handle and (by default Brownian) SDE."""
    form = integrator_form(integrator_id)
    if sde is None:
        sde = brownian_sde(handle, form=form, diffusion=diffusion)
    elif sde.form != form:
        raise IntegratorParameterError(
            f"{integrator_id} consumes a {form}-form SDE, got {sde.form}"
        )
    needs_retraction = integrator_id in ("geodesic-walk", "retractive-em")
    if needs_retraction and retraction is None:
        retraction = second_order_retraction(handle)
    if integrator_id in ("geodesic-walk", "rk4-geodesic") and sde.diffusion is None:
        raise IntegratorParameterError(
            f"{integrator_id} needs a Brownian SDE carrying its generator scale"
        )

    if integrator_id == "ito-em":
        def step(x, t, h, inc):
            return step_ito_projected(handle, sde, x, t, h, inc)
    elif integrator_id == "strat-heun":
        def step(x, t, h, inc):
            return step_stratonovich_heun_projected(handle, sde, x, t, h, inc)
    elif integrator_id == "geodesic-walk":
        def step(x, t, h, inc):
            return step_geodesic_walk(handle, sde, retraction, x, h, inc, t=t)
    elif integrator_id == "retractive-em":
        def step(x, t, h, inc):
            return step_retractive_em(handle, sde, retraction, x, t, h, inc)
    else:
        def step(x, t, h, inc):
            return step_rk4_geodesic(handle, sde, x, h, inc, t=t, substeps=rk4_substeps)

    return Stepper(
        integrator_id=integrator_id,
        handle=handle,
        sde=sde,
        uses_truncation=integrator_id in ("ito-em", "strat-heun", "retractive-em"),
        step=step,
    )
