"""End-to-end acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import time

import numpy as np
import pytest

from mhs_slab import current_equation as ce
from mhs_slab import divcurl as dc
from mhs_slab import spectral_core as sc
from mhs_slab import transport as tr
from mhs_slab.boundary_data import BoundaryData, derive
from mhs_slab.config import SolverConfig
from mhs_slab.divcurl import Fluxes
from mhs_slab.fixed_point import solve
from mhs_slab.linear_oracle import linear_field

from conftest import cosine_data, rich_data, slab, solenoidal_b, solenoidal_j0
from test_divcurl import direct_fluxes, solenoidal_current


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return emit


def test_criterion_1_trivial_equilibrium(report):
    config = SolverConfig()
    t0 = time.perf_counter()
    state = solve(BoundaryData.zeros(config.torus), config)
    elapsed = time.perf_counter() - t0
    d = state.diagnostics
    exact = not np.any(state.B[:2]) and np.all(state.B[2] == 1)
    p_const = float(np.ptp(state.p))
    worst = max(d.residual_curl, d.residual_div, d.residual_bn, d.residual_btau, d.residual_force,
                *d.pressure_mean_defect)
    ok = exact and p_const == 0 and worst <= 1e-12 and elapsed <= 1.0
    assert report(1, ok, f"B exact {exact}, p spread {p_const:.1e}, max residual {worst:.1e}, {elapsed:.2f} s")


def test_criterion_2_linearization(report):
    config = SolverConfig()
    t0 = time.perf_counter()
    gaps = {}
    for eps in (1e-4, 1e-3):
        data = cosine_data(config.torus, eps)
        state = solve(data, config, check=False)
        lin = linear_field(data.f_minus, data.f_plus, data.g, config.L, config.n_z)
        gaps[eps] = (
            float(np.max(np.abs(state.j0.as_array() - lin.j0))),
            float(np.max(np.abs(state.B - lin.B))),
        )
    elapsed = time.perf_counter() - t0
    C = 1.0
    within = all(max(g) <= C * eps**2 + 1e-8 for eps, g in gaps.items())
    ratios = [gaps[1e-3][i] / gaps[1e-4][i] for i in range(2)]
    ok = within and all(50 <= r <= 200 for r in ratios) and elapsed <= 30
    detail = ", ".join(f"eps {e:g}: j0 {g[0]:.2e} B {g[1]:.2e}" for e, g in gaps.items())
    assert report(2, ok, f"{detail}; ratios {ratios[0]:.1f}, {ratios[1]:.1f}; {elapsed:.1f} s")


def random_admissible_b(grid, amp, seed):
    """Band-limited random perturbation with a polynomial z-profile and max norm ``amp``."""
    rng = np.random.default_rng(seed)
    x, y = grid.base.mesh
    Z = grid.z[:, None, None] / grid.L
    b = np.zeros((3,) + grid.shape)
    for c in range(3):
        for m in range(-2, 3):
            for n in range(-2, 3):
                prof = sum(rng.normal() * Z**p for p in range(3))
                b[c] += prof * np.cos(m * x + n * y + rng.uniform(0, 2 * np.pi)) / (1 + m * m + n * n)
    return b * (amp / np.abs(b).max())


def test_criterion_3_kernel_identity(report):
    grid = slab(16, 32)
    t0 = time.perf_counter()
    b = random_admissible_b(grid, 5e-2, seed=11)
    flow = tr.flow_for(b, grid)
    kc = ce.build_kernel_coeffs(flow, SolverConfig().n_s)
    rng = np.random.default_rng(12)
    x, y = grid.base.mesh
    fields = [np.cos(x), np.sin(2 * y - x), np.ones(grid.base.shape)]
    for _ in range(3):
        u = np.zeros(grid.base.shape)
        for m in range(-3, 4):
            for n in range(-3, 4):
                u += rng.normal() * np.cos(m * x + n * y + rng.uniform(0, 6.3)) / (1 + m * m + n * n)
        fields.append(u)
    defect = max(ce.kernel_identity_defect(flow, kc, u) for u in fields)
    elapsed = time.perf_counter() - t0
    ok = defect <= 1e-6 and elapsed <= 60
    assert report(3, ok, f"max defect {defect:.2e} over {len(fields)} fields, {elapsed:.1f} s")


def test_criterion_4_boundary_values(report, rich_solution):
    data, state = rich_solution
    B = state.B
    errs = (
        float(np.max(np.abs(B[2, 0] - 1 - data.f_minus))),
        float(np.max(np.abs(B[2, -1] - 1 - data.f_plus))),
        float(np.max(np.abs(B[:2, 0] - data.g))),
    )
    ok = max(errs) <= 1e-6
    assert report(4, ok, "B3 inflow {:.2e}, B3 outflow {:.2e}, tangential {:.2e}".format(*errs))


def test_criterion_5_force_balance(report, rich_solution):
    _, state = rich_solution
    d = state.diagnostics
    ok = d.residual_force <= 1e-6 and max(d.pressure_mean_defect) <= 1e-9
    m1, m2 = d.pressure_mean_defect
    assert report(5, ok, f"|jxB - grad p| {d.residual_force:.2e}, inflow means {m1:.2e}, {m2:.2e}")


def test_criterion_6_divergence_transport(report):
    divs = {}
    for nz in (32, 64):
        grid = slab(32, nz)
        flow = tr.flow_for(solenoidal_b(grid, 0.1), grid)
        j = tr.transport_solve(flow, solenoidal_j0(grid.base))
        divs[nz] = tr.check_div_transport(j, grid.L)
    ratio = divs[32] / divs[64]
    ok = divs[64] <= 1e-5 and ratio >= 4
    assert report(6, ok, f"max slice div {divs[32]:.2e} (nz 32), {divs[64]:.2e} (nz 64), ratio {ratio:.1f}")


def test_criterion_7_contraction(report, rich_solution):
    _, state = rich_solution
    q = max(state.lipschitz_quotients)
    grid = slab(16, 32)
    data = rich_data(grid.base, 1e-3)
    rng = np.random.default_rng(3)
    probe = rng.normal(size=(2,) + grid.base.shape)
    probe = sc.from_spectral(sc.to_spectral(probe) * grid.base.keep)
    rates = []
    for amp in (1e-3, 1e-2):
        b = solenoidal_b(grid, amp)
        flow = tr.flow_for(b, grid)
        kc = ce.build_kernel_coeffs(flow, SolverConfig().n_s)
        rates.append(ce.neumann_contraction(b, flow, kc, data, probe))
    scale = rates[1] / rates[0]
    ok = q < 0.5 and 5 <= scale <= 20
    assert report(7, ok, f"Lipschitz quotient {q:.2e}; Neumann factor {rates[0]:.2e} -> {rates[1]:.2e} (x{scale:.2f})")


def test_criterion_8_divcurl(report):
    grid = slab(32, 64)
    x, y = grid.base.mesh
    j = solenoidal_current(grid)
    f = 0.01 * np.cos(x + y) + 0.02 * np.sin(2 * y)
    data = BoundaryData(f, f.copy(), np.zeros((2,) + grid.base.shape))
    W = dc.divcurl_solve(j, data, Fluxes(0.3, -0.2), grid)
    res = dc.residuals(W, j, f, f, grid.L)
    rel_curl = res["curl"] / float(np.max(np.abs(j)))
    J1, J2 = direct_fluxes(W, grid)
    flux_err = max(abs(J1 - 0.3), abs(J2 + 0.2))
    zero = BoundaryData.zeros(grid.base)
    W0 = dc.divcurl_solve(np.zeros((3,) + grid.shape), derive(zero, grid.L), Fluxes(), grid)
    ok = rel_curl <= 1e-8 and res["div"] <= 1e-8 and flux_err <= 1e-10 and not np.any(W0)
    assert report(8, ok, f"curl {rel_curl:.2e}, div {res['div']:.2e}, flux {flux_err:.2e}, zero data exact {not np.any(W0)}")


def test_criterion_9_multipliers(report):
    L = 1.0
    base = sc.TorusGrid2(16, 16)
    errs = {}
    errs["m(0) = L/2"] = abs(float(sc.slab_multiplier(np.array(0.0), L)) - L / 2)
    r1, r2 = sc.riesz_symbols(base)
    errs["Riesz at 0"] = max(abs(r1[0, 0]), abs(r2[0, 0]))
    k = np.array([50.0, 100.0, 400.0])
    errs["m(k) k -> 1"] = float(np.max(np.abs(sc.slab_multiplier(k, L) * k - 1)))
    rng = np.random.default_rng(9)
    c = sc.to_spectral(rng.normal(size=base.shape)) * base.keep
    errs["T0^-1 T0 = id"] = float(np.max(np.abs(sc.t0_inverse(sc.t0_apply(c, L), L) - c)) / np.max(np.abs(c)))
    ok = max(errs.values()) <= 1e-12
    assert report(9, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))
