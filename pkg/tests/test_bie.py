import numpy as np
import pytest

import stripbie as sb
from stripbie import bie, conformal
from stripbie.errors import ConvergenceError, ResolutionError
from oracles import ComponentFuncs, operator_oracle

CON = sb.InclusionKind.CONDUCTOR
INS = sb.InclusionKind.INSULATOR


def _one_circle_scene(kind=INS, center=0.2 + 0.5j, r=0.15):
    return sb.StripScene((sb.Inclusion(kind, sb.Circle(center, r)),))


# ---------------------------------------------------------------------------
# discretize
# ---------------------------------------------------------------------------

def test_discretize_empty_scene_is_unit_circle():
    b = bie.discretize(sb.StripScene(()), 32)
    t = b.params
    assert b.n_components == 1
    assert np.abs(b.eta[0] - np.exp(1j * t)).max() < 1e-15
    assert np.abs(b.deta[0] - 1j * np.exp(1j * t)).max() < 1e-15


def test_discretize_rejects_bad_n():
    with pytest.raises(ValueError):
        bie.discretize(sb.StripScene(()), 48)
    with pytest.raises(ValueError):
        bie.discretize(sb.StripScene(()), 8)


def test_discretize_images_inside_disk():
    b = bie.discretize(sb.example_scene("Ex1-CaseI", r=0.1), 64)
    assert b.n_components == 6
    inner = np.abs(b.eta[1:])
    assert inner.max() < 1.0
    assert np.abs(b.eta[0]).max() == pytest.approx(1.0, abs=1e-15)


def test_discretize_centered_circle_image_is_mirror_symmetric():
    # a circle centered on the vertical midline maps to a curve invariant
    # under zeta -> -conj(zeta); node i mirrors onto node (n/2 - i) mod n
    n = 64
    b = bie.discretize(_one_circle_scene(center=0.5j, r=0.2), n)
    curve = b.eta[1]
    idx = (n // 2 - np.arange(n)) % n
    assert np.abs(-np.conj(curve) - curve[idx]).max() < 1e-13


def test_discretize_windings():
    scene = sb.example_scene("Ex1-CaseI", r=0.1)
    b = bie.discretize(scene, 64)
    w = 2 * np.pi / 64
    wind0 = (w / (2j * np.pi)) * np.sum(b.deta[0] / b.eta[0])
    assert wind0 == pytest.approx(1.0, abs=1e-12)
    z1 = conformal.strip_to_disk(scene.inclusions[0].shape.center)
    wind1 = (w / (2j * np.pi)) * np.sum(b.deta[1] / (b.eta[1] - z1))
    assert wind1 == pytest.approx(-1.0, abs=1e-10)


def test_discretize_degenerate_image_raises():
    with pytest.raises(ResolutionError):
        bie.discretize(_one_circle_scene(r=1e-13), 16)


def test_aux_point_avoids_inclusions():
    # the natural midpoint candidate is blocked by the central inclusion
    scene = sb.example_scene("Ex1-CaseI", r=0.15)
    b = bie.discretize(scene, 64)
    z_aux = conformal.disk_to_strip(b.aux_point)
    assert not any(inc.shape.contains(z_aux) for inc in scene.inclusions)
    spacing = 2 * np.pi * np.abs(b.deta).max(axis=1) / 64
    dists = np.abs(b.eta - b.aux_point).min(axis=1)
    assert (dists >= spacing).all()


# ---------------------------------------------------------------------------
# build_rhp
# ---------------------------------------------------------------------------

def test_rhp_phases_and_coeff():
    scene = sb.StripScene((
        sb.Inclusion(CON, sb.Circle(-0.4 + 0.5j, 0.1)),
        sb.Inclusion(INS, sb.Circle(0.4 + 0.5j, 0.1)),
    ))
    b = bie.discretize(scene, 32)
    rhp = bie.build_rhp(b, scene)
    assert list(rhp.phase) == [0.0, 0.0, np.pi / 2]
    assert rhp.n_conductors == 1
    expect = np.exp(-1j * rhp.phase)[:, None] * (b.eta - b.aux_point)
    assert np.abs(rhp.coeff - expect).max() == 0.0


def test_rhp_data_on_outer_circle_is_zero():
    scene = sb.example_scene("Ex1-CaseI", r=0.1)
    b = bie.discretize(scene, 64)
    rhp = bie.build_rhp(b, scene)
    assert np.all(rhp.boundary_data[0] == 0.0)


def test_rhp_data_on_imaginary_axis_nodes():
    # conductor data at eta = iy is (2/pi) atan(y); insulator data there is 0
    n = 16
    t = 2 * np.pi * np.arange(n) / n
    yvals = np.linspace(0.1, 0.8, n)
    synthetic = np.vstack([np.exp(1j * t), 1j * yvals])
    deta = np.vstack([1j * np.exp(1j * t), np.ones(n)])
    b = bie.MappedBoundary(params=t, eta=synthetic, deta=deta, aux_point=0.5)
    cond_scene = _one_circle_scene(kind=CON)
    ins_scene = _one_circle_scene(kind=INS)
    rc = bie.build_rhp(b, cond_scene)
    ri = bie.build_rhp(b, ins_scene)
    assert np.abs(rc.boundary_data[1] - (2 / np.pi) * np.arctan(yvals)).max() < 1e-14
    assert np.abs(ri.boundary_data[1]).max() < 1e-14


def test_rhp_data_matches_log_formula():
    scene = sb.example_scene("Ex4", a=0.1, b=0.05)
    b = bie.discretize(scene, 32)
    rhp = bie.build_rhp(b, scene)
    eta = b.eta[2]
    expect = -np.log((1 - eta) / (1 + eta)).imag / np.pi
    assert np.abs(rhp.boundary_data[2] - expect).max() < 1e-14


# ---------------------------------------------------------------------------
# operators against adaptive quadrature
# ---------------------------------------------------------------------------

def _manual_circle_boundary(n, alpha):
    t = 2 * np.pi * np.arange(n) / n
    eta = np.exp(1j * t)[None, :]
    deta = (1j * np.exp(1j * t))[None, :]
    b = bie.MappedBoundary(params=t, eta=eta, deta=deta, aux_point=alpha)
    rhp = bie.RHPData(phase=np.zeros(1), coeff=eta - alpha, boundary_data=np.zeros((1, n)))
    return b, rhp


def test_apply_n_unit_circle_classical_kernel():
    # with alpha = 0 the kernel is the constant -1/(2 pi); cos integrates to 0
    n = 64
    b, rhp = _manual_circle_boundary(n, 0.0)
    mu = np.cos(b.params)
    out = bie.apply_N(rhp, b, mu)
    assert np.abs(out).max() < 1e-13
    oracle = operator_oracle([ComponentFuncs()], [0.0], 0.0,
                             [np.cos], [lambda t: -np.sin(t)], 0, b.params[5], "N")
    assert abs(out[5] - oracle) < 1e-10


def test_apply_n_shifted_alpha_matches_quadrature():
    n = 64
    alpha = 0.3 + 0.1j
    b, rhp = _manual_circle_boundary(n, alpha)
    mu = np.cos(b.params)
    out = bie.apply_N(rhp, b, mu)
    for idx in (0, 9, 31):
        oracle = operator_oracle([ComponentFuncs()], [0.0], alpha,
                                 [np.cos], [lambda t: -np.sin(t)], 0, b.params[idx], "N")
        assert abs(out[idx] - oracle) < 1e-10


def test_apply_m_unit_circle_is_minus_conjugation():
    # on the unit circle with alpha = 0 the operator reduces to minus the
    # conjugation operator: cos -> -sin
    n = 64
    b, rhp = _manual_circle_boundary(n, 0.0)
    mu = np.cos(b.params)
    out = bie.apply_M(rhp, b, mu)
    assert np.abs(out + np.sin(b.params)).max() < 1e-12
    for idx in (3, 17):
        oracle = operator_oracle([ComponentFuncs()], [0.0], 0.0,
                                 [np.cos], [lambda t: -np.sin(t)], 0, b.params[idx], "M")
        assert abs(out[idx] - oracle) < 1e-8


def test_two_component_operators_match_quadrature():
    # geometry chosen so the n=64 trapezoidal error sits far below the
    # oracle comparison tolerance (anchor at the disk center, wide gaps)
    scene = _one_circle_scene(kind=INS, center=0.3 + 0.5j, r=0.12)
    n = 64
    b = bie.discretize(scene, n)
    rhp = bie.build_rhp(b, scene)
    mus = [lambda t: np.cos(t), lambda t: np.sin(2 * t) + 0.5]
    mups = [lambda t: -np.sin(t), lambda t: 2 * np.cos(2 * t)]
    density = np.vstack([mus[0](b.params), mus[1](b.params)])
    outN = bie.apply_N(rhp, b, density)
    outM = bie.apply_M(rhp, b, density)
    comps = [ComponentFuncs(), ComponentFuncs(scene.inclusions[0].shape)]
    phases = list(rhp.phase)
    rng = np.random.default_rng(5)
    for flat in rng.choice(2 * n, size=4, replace=False):
        comp, idx = divmod(int(flat), n)
        s = b.params[idx]
        oN = operator_oracle(comps, phases, b.aux_point, mus, mups, comp, s, "N")
        oM = operator_oracle(comps, phases, b.aux_point, mus, mups, comp, s, "M")
        assert abs(outN[comp, idx] - oN) < 1e-8
        assert abs(outM[comp, idx] - oM) < 1e-8


def test_kernel_diagonal_is_off_diagonal_limit():
    # the nearest off-diagonal kernel entry approaches the diagonal limit
    # at first order in the node spacing
    scene = _one_circle_scene()
    diffs = {}
    for n in (64, 128):
        b = bie.discretize(scene, n)
        rhp = bie.build_rhp(b, scene)
        ops = bie.NystromOperators(rhp, b)
        w = 2 * np.pi / n
        i = n + 5 * (n // 64)  # same physical node of the inner component at both n
        j = i + 1
        eta, deta, A = b.eta_flat, b.deta_flat, rhp.coeff.reshape(-1)
        off = ((A[i] / A[j]) * deta[j] / (eta[j] - eta[i])).imag / np.pi
        diag = ops.diag_n[i] / w
        diffs[n] = abs(off - diag)
    ratio = diffs[64] / diffs[128]
    assert 1.4 < ratio < 2.6


def test_operators_are_linear():
    scene = sb.example_scene("Ex1-CaseI", r=0.1)
    b = bie.discretize(scene, 64)
    rhp = bie.build_rhp(b, scene)
    ops = bie.NystromOperators(rhp, b)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(6 * 64)
    y = rng.standard_normal(6 * 64)
    for apply in (ops.apply_n, ops.apply_m):
        lhs = apply(2.5 * x - 1.25 * y)
        rhs = 2.5 * apply(x) - 1.25 * apply(y)
        assert np.abs(lhs - rhs).max() < 1e-12


# ---------------------------------------------------------------------------
# solve_ie
# ---------------------------------------------------------------------------

def test_solve_empty_scene_is_trivial(empty_solution):
    res = empty_solution.result
    assert np.all(res.density == 0.0)
    assert np.all(res.levels == 0.0)
    assert res.anchor == 0.0
    assert res.iterations == 0
    assert np.abs(res.f_boundary).max() == 0.0


def test_symmetric_conductor_sits_at_half(symmetric_conductor_solution):
    res = symmetric_conductor_solution.result
    assert res.inclusion_consts[0] == pytest.approx(0.5, abs=1e-8)


def test_levels_are_constant_per_component(ex1_solution):
    assert ex1_solution.result.level_spread.max() < 1e-6


def test_solve_result_internal_relations(ex1_solution):
    res = ex1_solution.result
    b = ex1_solution.boundary
    rhp = ex1_solution.rhp
    # recovered constants tie back to the level constants
    assert res.anchor == pytest.approx(-res.levels[0], abs=0)
    assert np.abs(res.inclusion_consts - res.levels[1:]).max() < 1e-12  # insulators only here
    # boundary values satisfy the factorization identity
    f2 = (b.eta - b.aux_point) * res.g_boundary + res.anchor
    assert np.abs(f2 - res.f_boundary).max() < 1e-14
    # density is the imaginary part of coeff * g
    assert np.abs((rhp.coeff * res.g_boundary).imag - res.density).max() < 1e-12


def test_uncached_matvec_path_matches_cached():
    scene = sb.example_scene("Ex1-CaseI", r=0.1)
    b = bie.discretize(scene, 256)   # 1536 nodes -> several antisymmetric blocks
    rhp = bie.build_rhp(b, scene)
    cached = bie.NystromOperators(rhp, b)
    uncached = bie.NystromOperators(rhp, b, cache_bytes=0)
    assert cached.sums.cached and not uncached.sums.cached
    rng = np.random.default_rng(1)
    x = rng.standard_normal(6 * 256)
    assert np.abs(cached.apply_n(x) - uncached.apply_n(x)).max() < 1e-13
    assert np.abs(cached.apply_m(x) - uncached.apply_m(x)).max() < 1e-13


def test_nonconvergence_raises_with_history():
    scene = sb.example_scene("Ex1-CaseI", r=0.1)
    b = bie.discretize(scene, 64)
    rhp = bie.build_rhp(b, scene)
    with pytest.raises(ConvergenceError) as exc:
        bie.solve_ie(rhp, b, tol=1e-30, maxiter=20)
    assert len(exc.value.residual_history) > 0


def test_zero_net_flux_identity_through_conductors(symmetric_conductor_solution):
    from stripbie.potential import conductor_net_flux
    flux = conductor_net_flux(symmetric_conductor_solution)
    assert np.abs(flux).max() < 1e-12


def test_mixed_scene_constant_recovery():
    scene = sb.StripScene((
        sb.Inclusion(CON, sb.Circle(-0.4 + 0.5j, 0.1)),
        sb.Inclusion(INS, sb.Circle(0.4 + 0.5j, 0.1)),
    ))
    b = bie.discretize(scene, 128)
    rhp = bie.build_rhp(b, scene)
    res = bie.solve_ie(rhp, b)
    # conductor temperature from its level constant, insulator stream constant as-is
    assert res.inclusion_consts[0] == pytest.approx(res.levels[1] + 0.5 + res.anchor, abs=1e-14)
    assert res.inclusion_consts[1] == pytest.approx(res.levels[2], abs=1e-14)
    assert 0.0 < res.inclusion_consts[0] < 1.0


def test_boundary_values_have_zero_winding(ex1_solution):
    # single-valuedness witness: following f around each inner component, the
    # accumulated phase about any reference closes to an exact whole number
    # of turns, and is zero about a reference the curve cannot enclose
    res = ex1_solution.result
    b = ex1_solution.boundary
    w_far = 2.0 * np.abs(res.f_boundary).max() + 1.0
    for k in range(1, b.n_components):
        for w0, expect_zero in ((res.anchor, False), (w_far, True)):
            rel = res.f_boundary[k] - w0
            total = np.angle(np.roll(rel, -1) / rel).sum() / (2 * np.pi)
            assert abs(total - round(total)) < 1e-8
            if expect_zero:
                assert round(total) == 0
