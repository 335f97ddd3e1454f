"""End-to-end acceptance checks; each test records one pass/fail line in the terminal summary."""
import time

import numpy as np

from coherence_conversion import measures, asymptotic, oracle, photonic
from coherence_conversion.assisted import (assisted_max_probability, werner_assisted_probability,
                                           werner_protocol_simulate)
from coherence_conversion.conversion import max_conversion_probability, synthesize_instrument, success_output
from coherence_conversion.core import bloch_to_density, fidelity
from conftest import random_ball

WERNER_WEIGHTS = (0.8245, 0.2075)


def test_formula_against_oracle(acceptance_report):
    start = time.perf_counter()
    report = oracle.verify_queries(oracle.grid_queries(15), oracle.OracleConfig(grid_resolution=64))
    elapsed = time.perf_counter() - start
    failed = [r for r in report if not r['pass']]
    worst = max(r['delta'] for r in report)
    ok = not failed and elapsed <= 300
    acceptance_report(1, 'formula vs oracle', ok,
                      f'{len(report)} queries, {len(failed)} failed, worst deviation {worst:.4f}, {elapsed:.0f}s')
    assert ok


def test_synthesis_exactness(acceptance_report):
    rng = np.random.default_rng(1)
    worst_out = worst_res = 0.0
    done = 0
    while done < 1000:
        ri, si = random_ball(rng, 2)
        P = max_conversion_probability(ri, si)
        if P <= 0:
            continue
        p = P*rng.uniform(0.01, 1)
        inst, _ = synthesize_instrument(ri, si, p)
        worst_out = max(worst_out, np.abs(success_output(inst, ri) - p*bloch_to_density(si)).max())
        worst_res = max(worst_res, inst.completeness_residual())
        done += 1
    ok = worst_out <= 1e-9 and worst_res <= 1e-10
    acceptance_report(2, 'synthesis exactness', ok,
                      f'{done} queries, max output error {worst_out:.1e}, max residual {worst_res:.1e}')
    assert ok


def test_reference_points(acceptance_report):
    a = max_conversion_probability([1/3, 0, 5/6], [1/3, 0, 0])
    b = max_conversion_probability([np.sqrt(11)/6, 0, 5/6], [1, 0, 0])
    # any marginal with r_z = 5/6 that is not pure
    c = assisted_max_probability([0.2, 0.1, 5/6], [1, 0, 0])
    ok = a == 1.0 and abs(b - 1/6) <= 1e-12 and abs(c - 1/6) <= 1e-12
    acceptance_report(3, 'reference probabilities', ok, f'{a!r}, {b!r}, assisted {c!r}')
    assert ok


def test_werner_thresholds(acceptance_report):
    rng = np.random.default_rng(3)
    targets = random_ball(rng, 20000)
    mismatches = squared_overclaims = 0
    robust = []
    for q_w in WERNER_WEIGHTS:
        s = np.hypot(targets[:, 0], targets[:, 1])
        edge = q_w*np.sqrt(1 - targets[:, 2]**2)
        got = np.array([werner_assisted_probability(q_w, t) for t in targets])
        away = np.abs(s - edge) > 1e-9
        mismatches += np.sum(away & (got != np.where(s <= edge, 1.0, 0.0)))
        squared_overclaims += np.sum((s*s <= edge) & (got == 0))
        mu, _ = werner_protocol_simulate(q_w)
        robust.append(measures.c_delta_robustness(mu) - q_w)
    worst = max(abs(x) for x in robust)
    ok = mismatches == 0 and worst <= 1e-10
    acceptance_report(4, 'Werner thresholds', ok,
                      f'{mismatches} mismatches with s <= q_w*sqrt(1-s_z^2), steered robustness off by {worst:.1e}; '
                      f'the squared-s form would claim certainty on {squared_overclaims} targets '
                      'that cannot be reached deterministically')
    assert ok


def test_measures_consistency(acceptance_report):
    rng = np.random.default_rng(5)
    states = random_ball(rng, 10000)
    spectral = max(abs(measures.c_delta_robustness(bloch_to_density(v)) - measures.c_delta_robustness_qubit(v))
                   for v in states)
    violations = 0
    for ri, si in zip(states, random_ball(rng, 10000)):
        P = max_conversion_probability(ri, si)
        if np.hypot(si[0], si[1]) < 1e-12:
            continue
        rho, sigma = bloch_to_density(ri), bloch_to_density(si)
        for C in (measures.c_l1, measures.c_delta_robustness):
            violations += P > C(rho)/C(sigma) + 1e-9
    ok = spectral <= 1e-10 and violations == 0
    acceptance_report(5, 'measure consistency', ok,
                      f'spectral vs closed form {spectral:.1e}, {violations} monotone bound violations')
    assert ok


def test_asymptotic_pinch(acceptance_report):
    b = asymptotic.rate_bounds(asymptotic.EXAMPLE_RHO, asymptotic.mixed_plus_minus(0.25))
    rows = asymptotic.scan_bounds(np.linspace(0.01, 0.99, 99))
    p_wins = rows[:, 1] > rows[:, 2]
    ok = abs(b.lower - 1) <= 1e-10 and abs(b.upper - 1) <= 1e-10 and p_wins.any() and (~p_wins).any()
    acceptance_report(6, 'asymptotic pinch', ok,
                      f'lower {b.lower!r}, upper {b.upper!r}; probability bound wins at {p_wins.sum()} of {len(rows)} q')
    assert ok


def test_irreversibility_region(acceptance_report):
    rng = np.random.default_rng(7)
    worst_low = worst_high = -np.inf
    for v in random_ball(rng, 10000):
        rho = bloch_to_density(v)
        cc, cd = measures.c_cost_qubit(rho), measures.c_distillable(rho)
        worst_low = max(worst_low, asymptotic.lower_curve_at(rho) - cd)
        worst_high = max(worst_high, cd - cc)
    ok = worst_low <= 1e-9 and worst_high <= 1e-9
    acceptance_report(7, 'irreversibility region', ok,
                      f'max curve excess {worst_low:.1e}, max C_d - C_c {worst_high:.1e}')
    assert ok


def test_photonic_equivalence(acceptance_report):
    rng = np.random.default_rng(8)
    worst = 0.0
    for v in random_ball(rng, 1000):
        t0, t1 = rng.uniform(-180, 180, size=2)
        rho = bloch_to_density(v)
        _, rho_f = photonic.simulate_sio_circuit(t0, t1, rho)
        K1, K2 = photonic.circuit_kraus(t0, t1)
        worst = max(worst, np.abs(rho_f - K1 @ rho @ K1.conj().T - K2 @ rho @ K2.conj().T).max())
    ok = worst <= 1e-12
    acceptance_report(8, 'photonic channel equivalence', ok, f'1000 cases, max deviation {worst:.1e}')
    assert ok


def test_statistical_pipeline(acceptance_report):
    plus = bloch_to_density([1, 0, 0])
    fids = np.array([fidelity(photonic.tomography_reconstruct(photonic.simulate_tomography(plus, 10**6, seed)), plus)
                     for seed in range(100)])
    ri = bloch_to_density([np.sqrt(11)/6, 0, 5/6])
    t0, t1 = photonic.angles_for_diagonal(np.diag([1/np.sqrt(11), 1]))
    within = 0
    for seed in range(100):
        run = photonic.photonic_run(t0, t1, ri, 10**6, seed)
        within += abs(run['p_hat'] - 1/6) <= 5*run['std_error']
    ok = np.mean(fids >= 0.999) >= 0.95 and within >= 99
    acceptance_report(9, 'statistical pipeline', ok,
                      f'{np.sum(fids >= 0.999)}/100 fidelities >= 0.999 (min {fids.min():.6f}), '
                      f'{within}/100 estimates of 1/6 within 5 SE')
    assert ok
