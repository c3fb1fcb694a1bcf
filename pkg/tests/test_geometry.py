import numpy as np
import pytest

from manifold_sde import (
    OffManifoldError,
    SdeSpec,
    TangentRetraction,
    brownian_sde,
    brownian_soo,
    brownian_strat_drift,
    dual_tangent_frame,
    first_order_retraction,
    laplace_beltrami,
    laplace_drift_vector,
    make_manifold,
    second_order_retraction,
    soo_residual,
)
from manifold_sde.geometry import (
    ambient_basis,
    brownian_ito_drift,
    require_on_manifold,
    retraction_second_derivative,
    tubular_differential,
)
from manifold_sde.linalg import frobenius_inner, frobenius_norm
from manifold_sde.rng import RngStream


@pytest.fixture(scope="module")
def so3():
    return make_manifold("so", N=3)


@pytest.fixture(scope="module")
def sphere3():
    return make_manifold("sphere", n=3)


def test_require_on_manifold_rejects_off_points(sphere3):
    with pytest.raises(OffManifoldError):
        require_on_manifold(sphere3, 2.0 * sphere3.default_point())


def test_laplace_drift_is_twice_ito(so3):
    rng = RngStream(0, 0)
    x = so3.random_point(rng)
    assert frobenius_norm(laplace_drift_vector(so3, x) - 2.0 * brownian_ito_drift(so3, x)) < 1e-12


def test_trace_sum_insensitive_to_basis_projection(so3):
    """sum_b Gamma(e_b, Pi g^-1 e_b) equals sum_b Gamma(Pi e_b, Pi g^-1 e_b).

    The second slot is already tangent, so the bilinear extension off the
    tangent space in the first slot must not change the trace.
    """
    rng = RngStream(1, 0)
    x = so3.random_point(rng)
    basis = ambient_basis(so3.shape)
    w = so3.project(x, so3.metric_inv(x, basis))
    raw = np.sum(so3.christoffel(x, basis, w), axis=0)
    proj = np.sum(so3.christoffel(x, so3.project(x, basis), w), axis=0)
    assert frobenius_norm(raw - proj) < 1e-10


def test_noise_covariance_matches_inverse_metric(so3):
    # sum_k <a, sigma e_k><b, sigma e_k> = 2c <a, Pi g^-1 b>
    rng = RngStream(2, 0)
    x = so3.random_point(rng)
    c = 0.7
    sde = brownian_sde(so3, form="ito", diffusion=c)
    basis = ambient_basis(so3.shape)
    cols = sde.sigma(x, basis, 0.0)
    a = rng.normal(so3.shape)
    b = rng.normal(so3.shape)
    lhs = float(np.sum(frobenius_inner(a, cols) * frobenius_inner(b, cols)))
    rhs = 2.0 * c * float(frobenius_inner(a, so3.project(x, so3.metric_inv(x, b))))
    assert abs(lhs - rhs) < 1e-10


def test_dual_frame_reconstructs_projection(so3):
    rng = RngStream(3, 0)
    x = so3.random_point(rng)
    frame, dual = dual_tangent_frame(so3, x)
    w = rng.normal(so3.shape)
    coeff = frobenius_inner(dual, so3.metric(x, w[None]))
    recon = np.sum(frame * coeff[:, None, None], axis=0)
    assert frobenius_norm(recon - so3.project(x, w)) < 1e-9


def test_sphere_laplacian_of_coordinate():
    # f = x_1 has egrad e_1, zero Hessian; Delta f = -(n-1) x_1 on the unit sphere
    handle = make_manifold("sphere", n=3)
    x = np.zeros((3, 1))
    x[0, 0] = 1.0
    val = laplace_beltrami(handle, x, np.array([[1.0], [0.0], [0.0]]),
                           lambda w: np.zeros_like(w))
    assert abs(val - (-2.0)) < 1e-12


def test_laplacian_quadratic_cost(so3):
    """Quadratic cost f = <x, B x> + <g0, x> with exact ambient derivatives."""
    rng = RngStream(4, 0)
    x = so3.random_point(rng)
    b = rng.normal((3, 3))
    g0 = rng.normal((3, 3))

    egrad = b @ x + b.T @ x + g0
    val = laplace_beltrami(so3, x, egrad, lambda w: b @ w + b.T @ w)

    # compare with the intrinsic frame-sum at the same point
    frame, dual = dual_tangent_frame(so3, x)
    hess = np.einsum("kij,kij->", frame, b @ dual + np.swapaxes(b, -1, -2) @ dual)
    gamma = float(np.sum(egrad * so3.christoffel(x, frame, dual)))
    assert abs(val - (hess - gamma)) < 1e-8 * max(1.0, abs(val))


def test_brownian_sde_forms_and_scaling(so3):
    rng = RngStream(5, 0)
    x = so3.random_point(rng)
    ito = brownian_sde(so3, form="ito", diffusion=0.5)
    ito2 = brownian_sde(so3, form="ito", diffusion=1.0)
    assert frobenius_norm(ito2.drift(x, 0.0) - 2.0 * ito.drift(x, 0.0)) < 1e-12
    assert ito.form == "ito" and ito.diffusion == 0.5
    strat = brownian_sde(so3, form="stratonovich", diffusion=0.5)
    # unimodular group: vanishing Stratonovich drift
    assert frobenius_norm(strat.drift(x, 0.0)) < 1e-10
    w = rng.normal(so3.shape)
    # noise columns live in the tangent space
    col = ito.sigma(x, w, 0.0)
    assert frobenius_norm(so3.project(x, col) - col) < 1e-12


def test_sde_spec_rejects_unknown_form():
    with pytest.raises(ValueError):
        SdeSpec(form="milstein", drift=lambda x, t: x, sigma=lambda x, w, t: w,
                noise_shape=(2, 2))


def test_strat_drift_finite_difference_consistency(so3):
    # 2c * standard strat drift must equal the ito drift minus the sigma correction;
    # for a unimodular group the strat drift vanishes while ito does not.
    rng = RngStream(6, 0)
    x = so3.random_point(rng)
    assert frobenius_norm(so3.strat_drift(x)) < 1e-12
    assert frobenius_norm(brownian_strat_drift(so3, x) - so3.strat_drift(x)) < 1e-6
    assert frobenius_norm(so3.ito_drift(x) + 0.5 * x) < 1e-12


def test_second_order_retraction_reduces_to_rescaling_on_sphere(sphere3):
    # Pi(x) Gamma(x; v, v) = 0 on the sphere, so the corrected map is plain rescaling
    rng = RngStream(7, 0)
    x = sphere3.random_point(rng)
    v = sphere3.random_tangent(rng, x)
    r = second_order_retraction(sphere3)
    expected = (x + v) / np.linalg.norm(x + v)
    assert frobenius_norm(r.mapping(x, v) - expected) < 1e-14


def test_retraction_first_and_second_derivatives(so3):
    rng = RngStream(8, 0)
    x = so3.random_point(rng)
    v = so3.random_tangent(rng, x)
    r = second_order_retraction(so3)
    assert frobenius_norm(r.mapping(x, np.zeros_like(v)) - x) < 1e-14
    t = 1e-6
    first = (r.mapping(x, t * v) - r.mapping(x, -t * v)) / (2 * t)
    assert frobenius_norm(first - v) < 1e-7
    t = 1e-4
    second = (r.mapping(x, t * v) - 2 * x + r.mapping(x, -t * v)) / t**2
    assert frobenius_norm(second - (-so3.christoffel(x, v, v))) < 1e-5


def test_retraction_second_derivative_closed_vs_fd(so3):
    rng = RngStream(9, 0)
    x = so3.random_point(rng)
    v = so3.random_tangent(rng, x)
    r = second_order_retraction(so3)
    closed = retraction_second_derivative(r, x, v)
    fd = retraction_second_derivative(
        TangentRetraction(mapping=r.mapping), x, v)
    assert frobenius_norm(closed - fd) < 1e-5
    assert frobenius_norm(closed - (-so3.christoffel(x, v, v))) < 1e-12


def test_first_order_retraction_tangency(so3):
    rng = RngStream(10, 0)
    x = so3.random_point(rng)
    v = so3.random_tangent(rng, x)
    r = first_order_retraction(so3.tubular)
    t = 1e-6
    first = (r.mapping(x, t * v) - r.mapping(x, -t * v)) / (2 * t)
    assert frobenius_norm(first - v) < 1e-7


def test_tubular_differential_is_projection_on_tangent(so3):
    rng = RngStream(11, 0)
    x = so3.random_point(rng)
    v = so3.random_tangent(rng, x)
    d = tubular_differential(so3.tubular, x, v)
    assert frobenius_norm(d - v) < 1e-7


def test_functional_point_grassmann_projector():
    gr = make_manifold("grassmann", n=5, p=3)
    y = gr.random_point(RngStream(12, 0))
    proj = gr.functional_point(y)
    assert proj.shape[-2:] == (5, 5)
    assert frobenius_norm(proj - proj @ proj) < 1e-12
    assert frobenius_norm(proj - np.swapaxes(proj, -1, -2)) < 1e-13
    # non-quotient families pass through unchanged
    so3 = make_manifold("so", N=3)
    x = so3.random_point(RngStream(12, 1))
    assert np.array_equal(so3.functional_point(x), x)


def test_brownian_soo_residual_zero_on_battery(so3, sphere3):
    for handle in (so3, sphere3):
        x = handle.random_point(RngStream(13, 0))
        assert soo_residual(handle, x, brownian_soo(handle, x)) < 1e-8
