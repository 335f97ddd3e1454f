import json

import numpy as np
import pytest
from hypothesis import given, assume, strategies as st

from coherence_conversion import conversion, measures, core
from coherence_conversion.conversion import (is_reachable, max_conversion_probability, synthesize_instrument,
                                             reachable_boundary, max_transverse, complete_instrument,
                                             apply_instrument, success_output, SioInstrument, SioKraus)
from coherence_conversion.core import bloch_to_density
from conftest import random_ball

PURE_56 = np.array([np.sqrt(11)/6, 0, 5/6])

bloch_strategy = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).map(np.array).filter(
    lambda v: v @ v <= 1)


def commutes_with_dephasing(K):
    """Strict incoherence, checked on random matrices: K dephase(X) K^+ equals dephase(K X K^+)."""
    rng = np.random.default_rng(0)
    X = rng.normal(size=(2, 2)) + 1j*rng.normal(size=(2, 2))
    lhs = K @ np.diag(np.diag(X)) @ K.conj().T
    rhs = np.diag(np.diag(K @ X @ K.conj().T))
    Y = K.conj().T @ np.diag(np.diag(X)) @ K
    rhs2 = np.diag(np.diag(K.conj().T @ X @ K))
    return np.allclose(lhs, rhs) and np.allclose(Y, rhs2)


def test_reference_points():
    assert max_conversion_probability([1/3, 0, 5/6], [1/3, 0, 0]) == 1.0
    assert max_conversion_probability(PURE_56, [1, 0, 0]) == pytest.approx(1/6, abs=1e-12)
    assert max_conversion_probability([1/3, 0, 5/6], [1, 0, 0]) == 0.0
    assert max_conversion_probability([0, 0, 1], [0, 0, -1]) == 1.0
    assert max_conversion_probability([0, 0, 0.3], [0.1, 0, 0]) == 0.0


def test_probability_is_threshold_of_reachability(rng):
    for ri, si in zip(random_ball(rng, 400), random_ball(rng, 400)):
        P = max_conversion_probability(ri, si)
        if P <= 0:
            assert not is_reachable(ri, si, 1e-6)
            continue
        assert is_reachable(ri, si, P)
        assert is_reachable(ri, si, P/2)
        if P < 1 - 1e-6:
            assert not is_reachable(ri, si, P*(1 + 1e-6) + 1e-9)


def test_probability_invariant_under_free_symmetries(rng):
    for ri, si in zip(random_ball(rng, 100), random_ball(rng, 100)):
        P = max_conversion_probability(ri, si)
        a, b = rng.uniform(0, 2*np.pi, size=2)
        rot = lambda v, t: np.array([v[0]*np.cos(t) - v[1]*np.sin(t), v[0]*np.sin(t) + v[1]*np.cos(t), v[2]])
        flip = np.array([1, -1, -1])
        assert max_conversion_probability(rot(ri, a), rot(si, b)) == pytest.approx(P, abs=1e-9)
        assert max_conversion_probability(ri*flip, si) == pytest.approx(P, abs=1e-9)
        assert max_conversion_probability(ri, si*flip) == pytest.approx(P, abs=1e-9)


def test_probability_respects_robustness_monotone(rng):
    for ri, si in zip(random_ball(rng, 1000), random_ball(rng, 1000)):
        P = max_conversion_probability(ri, si)
        if P > 0 and np.hypot(si[0], si[1]) > 1e-6:
            bound = measures.c_delta_robustness_qubit(ri) / measures.c_delta_robustness_qubit(si)
            assert P <= bound + 1e-9


@given(bloch_strategy, bloch_strategy, st.floats(0.01, 1.0))
def test_synthesis_realizes_the_target(ri, si, frac):
    P = max_conversion_probability(ri, si)
    assume(P > 0)
    p = P*frac
    inst, sol = synthesize_instrument(ri, si, p)
    out = success_output(inst, ri)
    assert np.abs(out - p*bloch_to_density(si)).max() <= 1e-9
    assert inst.completeness_residual() <= 1e-10
    for k in inst.success + inst.failure:
        assert conversion.is_strictly_incoherent_kraus(k.matrix)
        assert commutes_with_dephasing(k.matrix)
        assert k.kind == conversion.kraus_kind(k.matrix)


def test_synthesis_split_and_symmetry_paths():
    # a target with small s_z that needs mixing with an incoherent tail
    inst, sol = synthesize_instrument(PURE_56, [0.3, 0, -0.9], max_conversion_probability(PURE_56, [0.3, 0, -0.9]))
    assert any(x['x_flip'] for x in sol.applied_symmetries)
    inst, sol = synthesize_instrument([0.5, 0.2, 0.3], [0.05, -0.05, 0.0], 1.0)
    assert sol.applied_symmetries[0]['z_rotation'] != 0
    inst, sol = synthesize_instrument([0.5, 0, 0.3], [0, 0, 0.4], 0.7)
    assert np.allclose(success_output(inst, [0.5, 0, 0.3]), 0.7*bloch_to_density([0, 0, 0.4]))


def test_synthesis_rejects_unreachable_with_reason():
    with pytest.raises(conversion.InfeasibleError, match='ellipsoid'):
        synthesize_instrument([1/3, 0, 5/6], [1, 0, 0], 0.1)
    with pytest.raises(conversion.InfeasibleError, match='cylinder'):
        synthesize_instrument(PURE_56, [1, 0, 0], 0.5)
    with pytest.raises(conversion.InfeasibleError, match='incoherent'):
        synthesize_instrument([0, 0, 0.5], [0.1, 0, 0], 0.5)
    with pytest.raises(core.ArgumentError):
        is_reachable([0.5, 0, 0], [0.1, 0, 0], 0)


def test_boundary_lies_on_the_edge():
    for ri in ([1/3, 0, 5/6], PURE_56, [0.5, 0, 1/3]):
        for p in (0.1, 0.5, 1.0):
            pts = reachable_boundary(ri, p, 256)
            assert pts.shape == (256, 2)
            assert np.abs(pts[:, 0]).max() <= max_transverse(ri, p) + 1e-12
            for sx, sz in pts:
                assert is_reachable(ri, [sx, 0, sz], p, tol=1e-9)
                out = np.array([1.01*sx + 1e-3*np.sign(sx), 0, 1.01*sz + 1e-3*np.sign(sz)])
                if out @ out <= 1:
                    assert not is_reachable(ri, out, p, tol=0)
    assert reachable_boundary([0, 0, 0.4], 0.5, 16).shape == (0, 2)


def test_low_probability_cylinder_is_inactive():
    # below 1-|r_z| the transverse bound equals the ellipsoid's own semi-axis
    ri = np.array([0.5, 0, 1/3])
    semi = 0.5 / np.sqrt(1 - 1/9)
    assert max_transverse(ri, 0.1) == pytest.approx(semi)
    assert is_reachable(ri, [semi, 0, 0], 0.1)
    assert is_reachable(ri, [semi, 0, 0], 2/3)


def test_completion_and_application():
    ops = [np.diag([0.6, 0.8]), np.array([[0, 0.3], [0, 0]])]
    inst = complete_instrument(ops)
    assert inst.completeness_residual() < 1e-12
    branches = apply_instrument(inst, bloch_to_density([0.3, 0, 0.2]))
    assert sum(p for _, p, _ in branches) == pytest.approx(1)
    with pytest.raises(core.PreconditionError):
        complete_instrument([np.diag([1.2, 0.1])])
    with pytest.raises(core.PreconditionError):
        complete_instrument([np.array([[1, 1], [0, 0]])/2])
    with pytest.raises(core.PreconditionError):
        conversion.kraus_kind(np.ones((2, 2)))


def test_instrument_json_round_trip():
    inst, _ = synthesize_instrument(PURE_56, [1, 0, 0], 1/6)
    text = json.dumps(inst.to_json())
    back = SioInstrument.from_json(json.loads(text))
    assert len(back.success) == len(inst.success)
    for a, b in zip(back.success, inst.success):
        assert np.array_equal(a.matrix, b.matrix) and a.kind == b.kind
    with pytest.raises(core.ArgumentError):
        SioKraus.from_json({'kind': 'diagonal', 're': [[0, 1], [1, 0]]})


def test_necessary_condition_and_helpers():
    assert conversion.necessary_sio_condition(bloch_to_density([0.9, 0, 0]), bloch_to_density([0.5, 0, 0]))
    assert not conversion.necessary_sio_condition(bloch_to_density([0.5, 0, 0]), bloch_to_density([0.9, 0, 0]))
    assert conversion.coherence_rank([1, 0, 1]) == 2
    assert conversion.is_incoherent_kraus(np.array([[1, 1], [0, 0]]))
    assert not conversion.is_strictly_incoherent_kraus(np.array([[1, 1], [0, 0]]))
