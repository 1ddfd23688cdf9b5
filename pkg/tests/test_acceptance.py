"""End-to-end acceptance checks at the documented operating points.

Each test evaluates one numbered criterion, records a PASS/FAIL line for the
terminal summary, then asserts. Tolerances and sample budgets are part of the
criteria and must not be loosened.
"""

import math
import time

import numpy as np
import pytest

from cvqkd.gaussian import (
    apply_symplectic,
    epr_product,
    invariants,
    is_physical,
    rotation,
    symplectic_eigenvalues,
    symplectic_form,
)
from cvqkd.keyrate import (
    holevo,
    holevo_oracle,
    mi_oracle,
    mutual_information,
    secret_key_rate,
    worst_case_breakdown,
    worst_case_key_rate,
)
from cvqkd.noise import (
    ChannelParams,
    SqueezingSpec,
    detection_noise,
    epr_theory,
    loss_channel,
    make_epr_state,
    phase_noise_channel,
    phase_noise_monte_carlo,
    r_from_measured,
)
from cvqkd.tomography import reconstruct, sample_homodyne

from conftest import random_normal_form_state


def optical_channel(**overrides):
    """Fitted channel with detection noise held out (pre-detector state)."""
    return ChannelParams(det_noise_a=0.0, det_noise_b=0.0, **overrides)


def detected_state(sqz_db):
    return make_epr_state(SqueezingSpec(var_sqz_db=sqz_db), ChannelParams())


def key_rate_at(sqz_db, **channel_overrides):
    ch = ChannelParams(**channel_overrides) if channel_overrides else ChannelParams()
    return secret_key_rate(make_epr_state(SqueezingSpec(var_sqz_db=sqz_db), ch)).k_nominal


def test_criterion_01_entanglement_product(criterion_log):
    t0 = time.perf_counter()
    g = make_epr_state(SqueezingSpec(var_sqz_db=-11.1), optical_channel())
    direct, optimized = epr_product(g, "a_given_b")
    r = r_from_measured(-11.1, 0.059)
    theory_gap = abs(direct - epr_theory(0.068, r))
    elapsed = time.perf_counter() - t0
    ok = abs(optimized - 0.31) <= 0.015 and theory_gap < 1e-9 and elapsed < 1.0
    criterion_log(
        1,
        ok,
        f"optimized product {optimized:.6f}, |pipeline - closed form| {theory_gap:.2e}, "
        f"{elapsed:.3f}s",
    )
    assert abs(optimized - 0.31) <= 0.015
    assert theory_gap < 1e-9
    assert elapsed < 1.0


def test_criterion_02_key_rate_at_operating_point(criterion_log):
    t0 = time.perf_counter()
    k = secret_key_rate(detected_state(-10.5)).k_nominal
    elapsed = time.perf_counter() - t0
    ok = abs(k - 0.38) <= 0.06 and elapsed < 1.0
    criterion_log(2, ok, f"k = {k:.6f} at 10.5 dB input, {elapsed:.3f}s")
    assert abs(k - 0.38) <= 0.06
    assert elapsed < 1.0


def test_criterion_03_threshold_squeezing_window(criterion_log):
    k_45 = key_rate_at(-4.5)
    k_60 = key_rate_at(-6.0)
    lo, hi = 0.5, 12.0
    assert key_rate_at(-lo) < 0.0 < key_rate_at(-hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if key_rate_at(-mid) < 0.0:
            lo = mid
        else:
            hi = mid
    crossing = 0.5 * (lo + hi)
    ok = 4.5 <= crossing <= 6.0
    criterion_log(
        3,
        ok,
        f"rate crosses zero at {crossing:.4f} dB input squeezing "
        f"(k(4.5 dB) = {k_45:+.4f}, k(6.0 dB) = {k_60:+.4f})",
    )
    assert 4.5 <= crossing <= 6.0


def test_criterion_04_pure_lossless_states_leak_nothing(criterion_log):
    ch = ChannelParams(
        epsilon=0.0, loss_a=0.0, loss_b=0.0, det_noise_a=0.0, det_noise_b=0.0
    )
    worst_chi = 0.0
    worst_gap = 0.0
    for r in (0.1, 0.5, 1.0, 1.5, 2.0):
        report = secret_key_rate(make_epr_state(SqueezingSpec(r=r), ch))
        worst_chi = max(worst_chi, abs(report.holevo_a), abs(report.holevo_b))
        worst_gap = max(worst_gap, abs(report.k_nominal - report.mi))
    ok = worst_chi < 1e-9 and worst_gap < 1e-9
    criterion_log(
        4, ok, f"max |holevo| {worst_chi:.2e}, max |k - mi| {worst_gap:.2e} over 5 inputs"
    )
    assert worst_chi < 1e-9
    assert worst_gap < 1e-9


def test_criterion_05_loss_budget_on_one_arm(criterion_log):
    g = make_epr_state(SqueezingSpec(var_sqz_db=-11.1), optical_channel())
    k_base = secret_key_rate(g).k_nominal
    k_020 = secret_key_rate(loss_channel(g, [0.0, 0.20])).k_nominal
    k_030 = secret_key_rate(loss_channel(g, [0.0, 0.30])).k_nominal
    ok = k_020 > 0.0 and k_030 < k_020 <= k_base
    criterion_log(
        5,
        ok,
        f"k {k_base:+.4f} baseline, {k_020:+.4f} with +0.20 arm loss, "
        f"{k_030:+.4f} with +0.30",
    )
    assert k_020 > 0.0
    assert k_030 < k_020 <= k_base


def test_criterion_06_invariant_formulas_match_oracles(criterion_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260816)
    worst_mi = 0.0
    worst_chi = 0.0
    for _ in range(1000):
        g = random_normal_form_state(rng)
        inv = invariants(g)
        mi_x, mi_p = mi_oracle(g)
        branch = 0 if mi_x >= mi_p else 1
        worst_mi = max(worst_mi, abs(mutual_information(inv) - max(mi_x, mi_p)))
        for direction in ("A", "B"):
            gap = abs(holevo(inv, direction) - holevo_oracle(g, direction)[branch])
            worst_chi = max(worst_chi, gap)
    elapsed = time.perf_counter() - t0
    ok = worst_mi < 1e-6 and worst_chi < 1e-6 and elapsed < 10.0
    criterion_log(
        6,
        ok,
        f"1000 states: max mi gap {worst_mi:.2e}, max holevo gap {worst_chi:.2e}, "
        f"{elapsed:.2f}s",
    )
    assert worst_mi < 1e-6
    assert worst_chi < 1e-6
    assert elapsed < 10.0


def test_criterion_07_channels_preserve_physicality(criterion_log):
    rng = np.random.default_rng(77)
    omega = symplectic_form(2)
    worst = math.inf
    for i in range(1000):
        if i % 2 == 0:
            g = random_normal_form_state(rng)
            s = np.zeros((4, 4))
            s[0:2, 0:2] = rotation(float(rng.uniform(0.0, math.pi)))
            s[2:4, 2:4] = rotation(float(rng.uniform(0.0, math.pi)))
            g = apply_symplectic(g, s)
            g = loss_channel(g, [float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0))])
            g = detection_noise(g, float(rng.uniform(0.0, 0.1)))
            g = phase_noise_channel(g, float(rng.uniform(0.0, 0.5)))
        else:
            ch = ChannelParams(
                epsilon=float(rng.uniform(0.0, 0.1)),
                loss_a=float(rng.uniform(0.0, 0.4)),
                loss_b=float(rng.uniform(0.0, 0.4)),
                det_noise_a=float(rng.uniform(0.0, 0.05)),
                det_noise_b=float(rng.uniform(0.0, 0.05)),
                phase_sigma_a=float(rng.uniform(0.0, 0.3)),
                phase_sigma_b=float(rng.uniform(0.0, 0.3)),
            )
            g = make_epr_state(SqueezingSpec(r=float(rng.uniform(0.0, 2.2))), ch)
        low = float(np.linalg.eigvalsh(g.entries + 1j * omega).min())
        worst = min(worst, low)
        if not is_physical(g):
            break
    ok = worst >= -1e-9
    criterion_log(7, ok, f"1000 processed states, lowest physicality eigenvalue {worst:.2e}")
    assert worst >= -1e-9


def test_criterion_08_worst_case_statistics(criterion_log):
    g = detected_state(-10.5)
    nominal = secret_key_rate(g).k_nominal
    values = {n: worst_case_key_rate(g, n) for n in (10**3, 10**4, 10**5, 10**6)}
    all_below = all(v <= nominal + 1e-12 for v in values.values())

    g_mid = detected_state(-5.0)
    nominal_mid = secret_key_rate(g_mid).k_nominal
    deficit_4 = nominal_mid - worst_case_key_rate(g_mid, 10**4)
    deficit_6 = nominal_mid - worst_case_key_rate(g_mid, 10**6)
    ratio = deficit_4 / deficit_6

    box = worst_case_breakdown(g, 10**6)
    box_mid = worst_case_breakdown(g_mid, 10**6)
    corner_vs_candidate = (
        box.corner_min <= box.candidate + 1e-12
        and box_mid.corner_min <= box_mid.candidate + 1e-12
    )
    ok = all_below and 8.0 <= ratio <= 12.0 and corner_vs_candidate
    criterion_log(
        8,
        ok,
        f"bound below nominal for all N, deficit ratio 1e4/1e6 = {ratio:.3f} "
        f"(ideal 10), corner minimum within 1e-12 of candidate direction",
    )
    assert all_below
    assert 8.0 <= ratio <= 12.0
    assert corner_vs_candidate


def test_criterion_09_tomography_end_to_end(criterion_log):
    t0 = time.perf_counter()
    g = detected_state(-11.1)
    k_true = secret_key_rate(g).k_nominal
    ds = sample_homodyne(g, n_per_setting=10**6, seed=42)
    res = reconstruct(ds)
    k_hat = secret_key_rate(res.gamma_hat).k_nominal
    entry_dev = float((np.abs(res.gamma_hat.entries - g.entries) / res.std_errors).max())
    elapsed = time.perf_counter() - t0
    ok = (
        abs(k_hat - k_true) < 0.02
        and entry_dev < 5.0
        and res.cross_check_ok
        and elapsed < 30.0
    )
    criterion_log(
        9,
        ok,
        f"|k_hat - k| = {abs(k_hat - k_true):.4f}, max entry deviation "
        f"{entry_dev:.2f} std errors, redundant-moment check "
        f"{'ok' if res.cross_check_ok else 'FAILED'}, {elapsed:.1f}s",
    )
    assert abs(k_hat - k_true) < 0.02
    assert entry_dev < 5.0
    assert res.cross_check_ok
    assert elapsed < 30.0


def test_criterion_10_phase_noise_monte_carlo(criterion_log):
    g = detected_state(-11.1)
    worst = 0.0
    for sigma in (0.01, 0.05, 0.2):
        est, se = phase_noise_monte_carlo(g, sigma, 10**6, seed=20240816, return_std_errors=True)
        exact = phase_noise_channel(g, sigma)
        worst = max(worst, float((np.abs(est.entries - exact.entries) / se).max()))

    grid = np.linspace(4.0, 12.0, 9)
    strictly_lower = True
    for v in grid:
        k0 = key_rate_at(-float(v))
        if k0 <= 0.0:
            continue
        k_sigma = key_rate_at(-float(v), phase_sigma_a=0.05, phase_sigma_b=0.05)
        if not k_sigma < k0:
            strictly_lower = False
    ok = worst < 3.0 and strictly_lower
    criterion_log(
        10,
        ok,
        f"max monte-carlo deviation {worst:.2f} std errors over three sigmas; "
        f"sigma = 0.05 lowers k at every positive-rate grid point: {strictly_lower}",
    )
    assert worst < 3.0
    assert strictly_lower
