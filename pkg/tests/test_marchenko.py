import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings

from nlsdirect.errors import StabilityError
from nlsdirect.marchenko import (MarchenkoKernel, fit_amplitude, multisoliton_left_kernel,
                                 multisoliton_right_kernel, recover_left, recover_right,
                                 relative_error, soliton_left_kernel, stability_factors)
from nlsdirect.potential import MultisolitonParams, SolitonParams, tabulate
from nlsdirect.potential import test1_params as soliton_case
from nlsdirect.potential import test2_params as four_soliton_case
from nlsdirect.volterra import KernelKind, solve_auxiliary
from conftest import potentials, quiet_tabulate
from oracles import naive_kbar_extended, naive_marchenko_extended

PROPS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
PUBLISHED_E = {300: 8.42e-3, 600: 2.08e-3, 900: 9.27e-4, 1200: 5.21e-4}


def left_kernel(model, nx, L=15.0):
    grid = quiet_tabulate(model, L, nx)
    kb = solve_auxiliary(grid, KernelKind.KBAR)
    return grid, kb, recover_left(kb, grid)


def reconstruction_residual(kb, om):
    """Max residual of the discrete left Marchenko equation at the nodes with x >= 0."""
    nx, H = kb.nx, om.spacing
    vals = np.concatenate([om.values, [0.0]])
    worst = 0.0
    for i in range(0, nx + 1):
        up, dn = kb.row(i)
        for d in range(0, nx - i + 1):
            m0 = i + d
            top = nx - m0
            w = np.ones(top + 1)
            w[0] = w[-1] = 0.5
            if top == 0:
                w[0] = 0.0
            integral = H * np.dot(w * up[: top + 1], vals[m0: m0 + top + 1])
            worst = max(worst, abs(dn[d] + vals[m0] + integral))
    return worst


def test_zero_potential():
    grid = tabulate("zero", 5.0, 30)
    assert not np.any(recover_left(solve_auxiliary(grid, KernelKind.KBAR)).values)
    assert not np.any(recover_right(solve_auxiliary(grid, KernelKind.M)).values)


@given(potentials())
@PROPS
def test_anchor_and_support(pot):
    n = pot.nx
    kb = solve_auxiliary(pot, KernelKind.KBAR)
    om = recover_left(kb, pot)
    assert om.values.size == n + 1 and om.spacing == 2 * pot.h
    assert om.values[-1] == -kb.row(n)[1][0]
    assert om.values[-1] == -pot.samples[-1] / 2
    assert all(om.at(k) == 0.0 for k in (n + 1, n + 2, 3 * n))
    m = solve_auxiliary(pot, KernelKind.M)
    omr = recover_right(m, pot)
    assert omr.values[-1] == -pot.samples[0] / 2
    assert np.all(omr.alphas <= 0) and omr.alphas[-1] == pytest.approx(-2 * pot.L)


@given(potentials(nx_min=20, nx_max=50))
@settings(max_examples=5, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_support_from_extended_recursion(pot):
    # running the recursion past 2L on the extended field gives exact zeros there
    ext = 6
    up, dn = naive_kbar_extended(pot, ext)
    full = naive_marchenko_extended(pot, up, dn, ext)
    assert np.all(full[pot.nx + 1:] == 0.0)
    om = recover_left(solve_auxiliary(pot, KernelKind.KBAR))
    assert np.max(np.abs(full[: pot.nx + 1] - om.values)) <= 1e-12 * max(np.abs(om.values).max(), 1e-300)


@pytest.mark.parametrize("nx", [300, 600])
def test_published_multisoliton_error(nx):
    P = four_soliton_case()
    _, _, om = left_kernel(P, nx)
    err = relative_error(om, multisoliton_left_kernel(P))
    assert PUBLISHED_E[nx] / 2 <= err <= PUBLISHED_E[nx] * 2


def test_published_multisoliton_error_1200(test2_1200):
    grid, kb, _ = test2_1200
    om = recover_left(kb, grid)
    ref = multisoliton_left_kernel(four_soliton_case())
    err = relative_error(om, ref)
    assert PUBLISHED_E[1200] / 2 <= err <= PUBLISHED_E[1200] * 2
    # the closed form has sum b_j c_j = 0 at alpha = 0
    assert abs(ref(0.0)) < 1e-15
    assert abs(om.values[0]) <= 2 * err * np.abs(om.values).max()


def test_convergence_ratios_multisoliton():
    P = four_soliton_case()
    ref = multisoliton_left_kernel(P)
    errs = [relative_error(left_kernel(P, n)[2], ref) for n in (300, 600)]
    assert 3.4 <= errs[0] / errs[1] <= 4.6


def test_convergence_ratios_soliton():
    S = soliton_case()
    ref = soliton_left_kernel(S)
    errs = [relative_error(left_kernel(S, n)[2], ref) for n in (150, 300, 600)]
    assert all(3.4 <= a / b <= 4.6 for a, b in zip(errs, errs[1:]))
    assert 1e-3 <= errs[1] < 1e-2


def test_soliton_kernel_is_exact_exponential():
    # for a = p the one-soliton is the 1x1 triplet (A, b, c) = (p, 1, c)
    S = SolitonParams(c=1.5, a=0.8, p=0.8)
    P = MultisolitonParams(A=[[0.8]], b=[1.0], c=[1.5])
    al = np.linspace(0, 30, 13)
    assert np.allclose(soliton_left_kernel(S)(al), multisoliton_left_kernel(P)(al), rtol=1e-14)
    with pytest.raises(ValueError):
        soliton_left_kernel(SolitonParams(1.0, 1.0, 2.0))


@pytest.mark.parametrize("model", ["soliton", "multisoliton"])
def test_reconstruction_residual(model):
    M = soliton_case() if model == "soliton" else four_soliton_case()
    for nx in (150, 300):
        grid, kb, om = left_kernel(M, nx)
        res = reconstruction_residual(kb, om)
        assert res <= 5 * grid.h ** 2 * np.abs(om.values).max()


def test_reconstruction_diagonal_is_exact():
    grid, kb, om = left_kernel(four_soliton_case(), 100)
    H = om.spacing
    for m in range(0, 101, 10):
        up, dn = kb.row(m)
        top = 100 - m
        w = np.ones(top + 1)
        w[-1] = 0.5
        w[0] = 0.5 if top > 0 else 0.0
        lhs = dn[0] + om.values[m] + H * np.dot(w * up[: top + 1], om.values[m:])
        assert abs(lhs) <= 1e-13 * np.abs(om.values).max()


def test_right_kernel_decays_towards_minus_2L(test2_1200):
    grid, _, m = test2_1200
    omr = recover_right(m, grid)
    assert abs(omr.values[-1]) <= 1e-10
    assert abs(omr.values[-1]) < abs(omr.values[omr.values.size // 2]) < abs(omr.values[0])


def test_right_kernel_converges(test2_600, test2_1200):
    ref = multisoliton_right_kernel(four_soliton_case())
    e600 = relative_error(recover_right(test2_600[2]), ref)
    e1200 = relative_error(recover_right(test2_1200[2]), ref)
    assert e1200 < e600 / 3


def test_right_closed_form_mirror():
    # b = c = sqrt(2) gives Q = N = 1 and the even profile -2 sech(2x)
    P = MultisolitonParams(A=[[1.0]], b=[2 ** 0.5], c=[2 ** 0.5])
    al = np.linspace(0, 10, 11)
    assert np.allclose(multisoliton_right_kernel(P)(-al), multisoliton_left_kernel(P)(al), rtol=1e-13)


def test_stability_failure_right():
    grid = quiet_tabulate(four_soliton_case(), 15.0, 150)
    m = solve_auxiliary(grid, KernelKind.M)
    assert stability_factors(m).min() <= 0
    with pytest.raises(StabilityError, match="smaller h"):
        recover_right(m, grid)


def test_stability_factors_positive_when_resolved(test2_1200):
    _, kb, m = test2_1200
    assert stability_factors(kb).min() > 0.9
    assert stability_factors(m).min() > 0.5


def test_wrong_kind_and_grid():
    g1 = tabulate(soliton_case(), 15.0, 40)
    g2 = tabulate(SolitonParams(1.0, 1.0, 1.0), 15.0, 40)
    kb = solve_auxiliary(g1, KernelKind.KBAR)
    with pytest.raises(ValueError):
        recover_right(kb)
    with pytest.raises(ValueError):
        recover_left(solve_auxiliary(g1, KernelKind.M))
    with pytest.raises(ValueError):
        recover_left(kb, g2)


def test_relative_error_cases():
    om = MarchenkoKernel("left", 0.5, 3.0 * np.exp(-0.5 * np.arange(5)))
    assert relative_error(om, lambda a: 3.0 * np.exp(-a)) == 0.0
    assert relative_error(om, lambda a: 3.0 * np.exp(-float(a))) == 0.0
    with pytest.raises(ValueError):
        relative_error(om, lambda a: np.zeros_like(a))


def test_fit_amplitude_exact():
    om = MarchenkoKernel("left", 0.1, 2.5 * np.exp(-0.1 * np.arange(50)))
    assert fit_amplitude(om, 1.0) == pytest.approx(2.5, rel=1e-14)


def test_kernel_io_roundtrip(tmp_path):
    for side in ("left", "right"):
        om = MarchenkoKernel(side, 0.025, np.linspace(1.0, 0.0, 41) ** 3)
        back = MarchenkoKernel.from_csv(om.to_csv(tmp_path / f"{side}.csv"))
        assert back.side == side and back.spacing == pytest.approx(0.025, rel=1e-15)
        assert np.array_equal(back.values, om.values)
        doc = __import__("json").loads(om.to_json(tmp_path / f"{side}.json").read_text())
        assert doc["side"] == side and doc["omega"] == list(om.values)


def test_kernel_validation():
    with pytest.raises(ValueError):
        MarchenkoKernel("up", 1.0, [1.0])
    om = MarchenkoKernel("left", 1.0, [1.0, 2.0])
    with pytest.raises(ValueError):
        om.values[0] = 3.0
    with pytest.raises(IndexError):
        om.at(-1)
