"""Acceptance criteria for the full pipeline, one test per criterion.

Each test prints a single pass/fail line with the measured quantities so a
plain ``pytest -v`` run doubles as the acceptance report.  Desk scale is
N = 2, p = 3 throughout; the 1-D cases serve as closed-form oracles.
"""

import math
import time

import numpy as np
import pytest

from multipeak.ansatz import (
    PeakConfiguration,
    build_ansatz,
    residual,
    residual_l2,
    residual_rate,
    uniform_configuration,
)
from multipeak.asymptotics import (
    InteractionSpec,
    interaction_limit,
    mass_constant,
    taylor_remainder,
    taylor_remainder_check,
)
from multipeak.cli import main, make_grid
from multipeak.dancer import (
    align_and_compare,
    minimal_period_gaps,
    newton_solve,
    psi_decay_fit,
    verify_evenness,
)
from multipeak.domain import GridField, solve_helmholtz
from multipeak.groundstate import eval_radial, profile_tail_constants, solve_ground_state
from multipeak.reduction import d_mesh_limit, equilibrate
from multipeak.spectrum import lowest_eigenpairs, principal_angles


def report(num: int, ok: bool, desc: str, detail: str) -> None:
    print(f"\n[criterion {num:02d}] {'PASS' if ok else 'FAIL'} — {desc}: {detail}")


def test_criterion_01_ground_state_oracle():
    t0 = time.perf_counter()
    profile = solve_ground_state(1, 3, tol=1e-12)
    elapsed = time.perf_counter() - t0
    r = np.linspace(0.0, 10.0, 4001)
    err = float(np.max(np.abs(eval_radial(profile, r) - np.sqrt(2.0) / np.cosh(r))))
    ok = err < 1e-8 and elapsed < 1.0
    report(1, ok, "ground-state oracle",
           f"sup error vs sqrt(2) sech = {err:.2e}, runtime = {elapsed:.2f}s")
    assert ok


def test_criterion_02_tail_constants(profile_n2):
    r = profile_n2.radial_grid
    mask = (r >= 8.0) & (r <= 12.0)
    w = r[mask] ** 0.5 * np.exp(r[mask]) * profile_n2.values[mask]
    spread = float((w.max() - w.min()) / w.mean())
    L0, _ = profile_tail_constants(profile_n2, (8.0, 12.0))
    ok = spread < 0.02
    report(2, ok, "tail constants",
           f"relative spread of r^(1/2) e^r U on [8,12] = {spread:.4f} (L0 = {L0:.6f})")
    assert ok


def test_criterion_03_single_peak_spectrum(spectral_k1):
    lam0 = float(spectral_k1.eigenvalues[0])
    near = int(np.argmin(np.abs(spectral_k1.eigenvalues)))
    overlap = float(np.abs(spectral_k1.overlap_matrix[near, 0]))
    ok = abs(lam0 + 2.0) < 0.02 * 2.0 and abs(
        spectral_k1.eigenvalues[near]
    ) < 0.1 and overlap > 0.99
    report(3, ok, "single-peak spectrum",
           f"lambda_min = {lam0:.4f} (target -2), translation overlap = {overlap:.4f}")
    assert ok


def test_criterion_04_near_kernel_dimension(profile_n2, spectral_k2, bundle_k2):
    details, ok = [], True
    for k, spectral, bundle in (
        (2, spectral_k2, bundle_k2),
        (3, None, None),
    ):
        if spectral is None:
            bundle = build_ansatz(
                uniform_configuration(0.2, 3), profile_n2, make_grid(0.2)
            )
            spectral = lowest_eigenpairs(bundle, count=2 * 3 + 2)
        ev = spectral.eigenvalues
        inside = int(np.sum(np.abs(ev) < 0.1))
        outside = min(abs(l) for l in ev if abs(l) >= 0.1)
        angles = principal_angles(spectral, bundle)
        ok = ok and inside == k and outside > 0.3 and angles.max() < 0.1
        details.append(
            f"k={k}: {inside} in (-0.1,0.1), next |lambda| = {outside:.3f}, "
            f"max angle = {angles.max():.4f}"
        )
    report(4, ok, "near-kernel dimension", "; ".join(details))
    assert ok


def test_criterion_05_residual_rate(sigma_sweep):
    sup_ratios, l2_ratios = [], []
    for sigma, (bundle, _, _) in sigma_sweep.items():
        rate = residual_rate(bundle.config.sigma_min, 2)
        sup_ratios.append(residual(bundle).sup_norm() / rate)
        l2_ratios.append(residual_l2(bundle) / rate)
    band_sup = max(sup_ratios) / min(sup_ratios)
    band_l2 = max(l2_ratios) / min(l2_ratios)
    ok = band_sup < 3.0 and band_l2 < 3.0
    report(5, ok, "residual rate",
           f"sup|M|/rate in [{min(sup_ratios):.1f}, {max(sup_ratios):.1f}] "
           f"(band {band_sup:.2f}), L2 band {band_l2:.2f} over sigma 4..8")
    assert ok


def test_criterion_06_correction_rate(sigma_sweep):
    ratios, iters = [], []
    for sigma, (bundle, _, state) in sigma_sweep.items():
        rate = residual_rate(bundle.config.sigma_min, 2)
        ratios.append(state.sup_norm / rate)
        iters.append(state.iterations)
    band = max(ratios) / min(ratios)
    ok = band < 3.0 and max(iters) <= 30
    report(6, ok, "correction rate",
           f"||v||_inf/rate in [{min(ratios):.1f}, {max(ratios):.1f}] "
           f"(band {band:.2f}), max iterations = {max(iters)}")
    assert ok


def test_criterion_07_d_consistency(profile_n2):
    """Projection vs interaction-integral d_i, measured in the mesh limit.

    At any fixed mesh the comparison floors out at the O(h²) error of the
    discrete near-kernel basis (flat ~1.4% in the separation), so both
    routes are Richardson-extrapolated over grid halvings first.
    """
    rels = {}
    for sigma in (6.0, 7.0, 8.0):
        eps = 2 * np.pi / (2 * sigma + 8 * sigma / 3)
        config = PeakConfiguration(eps, (-np.pi, -np.pi + 2 * sigma * eps))
        d_proj, d_int = d_mesh_limit(config, profile_n2, make_grid(eps))
        rels[sigma] = float(np.max(np.abs(d_int - d_proj) / np.abs(d_proj)))
    values = [rels[s] for s in (6.0, 7.0, 8.0)]
    ok = values[0] <= 0.20 and values[2] <= 0.10 and values[0] > values[1] > values[2]
    report(7, ok, "d_i consistency",
           "relative difference at sigma 6/7/8 = "
           + "/".join(f"{v:.2e}" for v in values)
           + " (<= 20% at 6, monotone, <= 10% at 8)")
    assert ok


def test_criterion_08_equidistribution(profile_n2):
    details, ok = [], True
    rng = np.random.default_rng(7)
    for k, eps in ((2, 0.3), (3, 0.2)):
        factory = lambda e: make_grid(e)
        uniform = uniform_configuration(eps, k)
        gap_angle = 2 * np.pi / k
        perturbed = PeakConfiguration(
            eps,
            tuple(
                a + 0.05 * gap_angle * s
                for a, s in zip(uniform.angles, rng.uniform(-1, 1, k))
            ),
        )
        tol = 1e-2 * residual_rate(uniform.sigma_min, 2)
        res = equilibrate(perturbed, profile_n2, factory, tol=tol)
        gaps = np.asarray(res.config.gaps)
        dev = float(np.max(np.abs(gaps - uniform.period / k)) / (uniform.period / k))
        sym = equilibrate(uniform, profile_n2, factory, tol=tol)
        ok = ok and dev < 1e-3 and sym.newton_steps == 0 and np.max(
            np.abs(sym.d_history[0])
        ) < tol
        details.append(
            f"k={k}: gap deviation {dev:.2e} in {res.newton_steps} steps, "
            f"uniform start |d| = {np.max(np.abs(sym.d_history[0])):.1e} "
            f"with {sym.newton_steps} steps"
        )
    report(8, ok, "equidistribution", "; ".join(details))
    assert ok


def test_criterion_09_dancer_uniqueness(bundle_k1, bundle_k2):
    tol = 1e-11
    sol1 = newton_solve(bundle_k1, tol=tol)
    even = verify_evenness(sol1)
    full, half = minimal_period_gaps(sol1)
    rng = np.random.default_rng(5)
    sols = []
    for _ in range(2):
        bump = 1e-3 * rng.standard_normal(bundle_k2.grid.shape)
        start = GridField(bundle_k2.grid, bundle_k2.ubar.data + bump)
        sols.append(newton_solve(bundle_k2, initial=start, tol=tol))
    diff = align_and_compare(sols[0].field, sols[1].field)
    ok = (
        sol1.iterations <= 8
        and diff < 1e-6
        and even < 10 * tol
        and full < 1e-9
        and half > 0.5
    )
    report(9, ok, "Dancer solution and uniqueness probe",
           f"k=1 iterations = {sol1.iterations}, two-start aligned diff = {diff:.2e}, "
           f"evenness = {even:.2e}, period defects = ({full:.1e}, {half:.2f})")
    assert ok


def test_criterion_10_psi_decay(profile_n2):
    fit = psi_decay_fit(
        profile_n2, (0.35, 0.3, 0.25, 0.2), k=1, eta=0.3,
        grid_factory=lambda e: make_grid(e),
    )
    ok = fit.slope <= -1.5
    report(10, ok, "psi decay",
           f"fitted slope of log sup(|psi| e^(0.3 d)) vs pi/eps = {fit.slope:.3f} "
           "(threshold -1.5)")
    assert ok


def test_criterion_11_interaction_asymptotics(profile_n2):
    # N = 1 closed form: pure exponentials, limit = 1 · ∫ e^{−2|x|+x} = 4/3
    decay = lambda r: math.exp(-r)
    spec1 = InteractionSpec(decay, decay, a=2.0, b=1.0, y0=12.0)
    est1 = interaction_limit(spec1, (8.0, 10.0, 12.0, 16.0))
    rel1 = abs(est1.limit - 4.0 / 3.0) / (4.0 / 3.0)

    # N = 2 with the computed profile: target L0 · C0
    prof_f = lambda r: float(eval_radial(profile_n2, np.asarray([r]))[0])
    spec2 = InteractionSpec(prof_f, prof_f, a=2.0, b=1.0, y0=12.0, dimension=2)
    target = profile_n2.tail_L0 * mass_constant(spec2)
    est2 = interaction_limit(spec2, (8.0, 10.0, 12.0, 16.0))
    at12 = float(est2.rescaled[list(est2.separations).index(12.0)])
    rel2 = abs(at12 - target) / target
    gaps = np.abs(est2.rescaled - est2.rescaled[-1])
    monotone = bool(np.all(np.diff(gaps[:-1]) < 0))
    ok = rel1 < 0.02 and rel2 < 0.10 and monotone
    report(11, ok, "interaction asymptotics",
           f"N=1 closed-form rel = {rel1:.2e}; N=2 rescaled at y0=12 within "
           f"{rel2:.2%} of L0*C0 = {target:.3f}, monotone = {monotone}")
    assert ok


def test_criterion_12_taylor_property():
    ratios = [
        taylor_remainder_check(100_000, 3.0, seed).max_ratio
        for seed in (3, 7, 11)
    ]
    spread = (max(ratios) - min(ratios)) / np.mean(ratios)
    exact_zero = taylor_remainder(1.7, 0.0, 3.0) == 0.0
    ok = all(np.isfinite(ratios)) and spread < 0.05 and exact_zero
    report(12, ok, "Taylor lemma property test",
           f"max ratios over 3 seeds = {[f'{r:.6f}' for r in ratios]} "
           f"(spread {spread:.2%}), b=0 exact zero = {exact_zero}")
    assert ok


def test_criterion_13_infrastructure(tmp_path):
    # bit-identical reproduction of a nontrivial pipeline run
    args = ["spectrum", "--eps", "0.3", "--k", "2"]
    outs = []
    for name in ("r1.json", "r2.json"):
        path = tmp_path / name
        assert main(args + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    identical = outs[0] == outs[1]

    # second-order convergence of the Helmholtz solve under grid halving
    grid = make_grid(0.5)
    errs = []
    for _ in range(3):
        X1, X2 = grid.meshes()
        R = grid.transverse_extent
        exact = np.cos(2 * grid.epsilon * X1) * np.cos(np.pi * X2 / (2 * R))
        lam = 1 + (2 * grid.epsilon) ** 2 + (np.pi / (2 * R)) ** 2
        u = solve_helmholtz(GridField(grid, lam * exact), tol=1e-12)
        errs.append(float(np.max(np.abs(u.data - exact))))
        grid = grid.refined()
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    second_order = all(3.6 < r < 4.4 for r in ratios)
    ok = identical and second_order
    report(13, ok, "infrastructure",
           f"bit-identical reruns = {identical}, refinement error ratios = "
           + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok
