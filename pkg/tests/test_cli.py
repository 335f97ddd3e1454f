import json

import numpy as np
import pytest

from coherence_conversion import cli, photonic
from coherence_conversion.core import state_from_json, density_to_bloch

MIXED = '{"bloch": [0.3333333333333333, 0, 0.8333333333333334]}'
PURE = json.dumps({'bloch': [np.sqrt(11)/6, 0, 5/6]})
PLUS = '{"bloch": [1, 0, 0]}'


def invoke(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_convert(capsys):
    code, out, _ = invoke(capsys, 'convert', '--initial', MIXED, '--target', PLUS)
    assert code == 0 and json.loads(out) == {'p_max': 0.0}
    code, out, _ = invoke(capsys, 'convert', '--initial', PURE, '--target', PLUS, '--p', '0.1')
    got = json.loads(out)
    assert got['p_max'] == pytest.approx(1/6, abs=1e-12) and got['reachable'] is True


def test_region_csv_and_json(capsys):
    code, out, _ = invoke(capsys, 'region', '--initial', MIXED, '--p', '0.5', '--n', '32', '--format', 'csv')
    lines = out.splitlines()
    assert code == 0 and lines[0] == 's_x,s_z' and len(lines) == 33
    code, out, _ = invoke(capsys, 'region', '--initial', MIXED, '--n', '8')
    assert np.array(json.loads(out)['rows']).shape == (8, 2)


def test_synth(capsys):
    code, out, _ = invoke(capsys, 'synth', '--initial', PURE, '--target', PLUS)
    got = json.loads(out)
    assert code == 0 and got['output_error'] <= 1e-9 and got['completeness_residual'] <= 1e-10
    code, _, err = invoke(capsys, 'synth', '--initial', MIXED, '--target', PLUS)
    assert code == 1 and json.loads(err)['error'] == 'infeasible'


def test_assist_and_werner(capsys):
    rb = json.dumps({'bloch': [np.sqrt(11)/6*0.3, 0, 5/6]})
    code, out, _ = invoke(capsys, 'assist', '--initial', rb, '--target', PLUS)
    got = json.loads(out)
    assert code == 0 and got['probability'] == pytest.approx(1/6, abs=1e-12)
    assert got['formula_p'] == pytest.approx(1/6, abs=1e-12)
    code, out, _ = invoke(capsys, 'werner', '--q-w', '0.8245', '--target', '{"bloch": [0.5, 0, 0.5]}')
    got = json.loads(out)
    assert code == 0 and got['p'] == 1.0 and got['delta_robustness'] == pytest.approx(0.8245, abs=1e-10)
    assert invoke(capsys, 'werner')[0] == 2


def test_measures_and_asymptotic(capsys):
    code, out, _ = invoke(capsys, 'measures', '--initial', MIXED, '--target', '{"bloch": [0, 0, 1]}')
    got = json.loads(out)
    assert code == 0 and got['probability_upper_bounds'] == {'l1': None, 'delta_robustness': None}
    code, out, _ = invoke(capsys, 'asymptotic', '--n', '9', '--format', 'csv')
    lines = out.splitlines()
    # q = 1/2 makes the target incoherent and is dropped from the scan
    assert code == 0 and lines[0] == 'q,lower_P,lower_ratio,upper' and len(lines) == 9
    assert not any(line.startswith('0.5,') for line in lines)
    code, out, _ = invoke(capsys, 'asymptotic', '--target', '{"bloch": [0.5, 0, 0]}')
    got = json.loads(out)
    assert got['pinched'] and got['lower'] == pytest.approx(1, abs=1e-10)
    code, out, _ = invoke(capsys, 'irreversibility', '--n', '5')
    assert np.array(json.loads(out)['rows']).shape == (5, 3)


def test_verify_random_suite(capsys):
    code, out, _ = invoke(capsys, 'verify', '--suite', 'random', '--n', '3', '--seed', '7')
    got = json.loads(out)
    assert code == 0 and len(got['results']) == 3 and got['all_pass']
    assert invoke(capsys, 'verify', '--suite', 'cube')[0] == 2


def test_photonic_and_tomography(capsys, tmp_path):
    args = ('photonic', '--initial', PURE, '--theta0', str(np.rad2deg(np.arccos(1/np.sqrt(11)))),
            '--theta1', '0', '--shots', '100000', '--seed', '5')
    code, out, _ = invoke(capsys, *args)
    got = json.loads(out)
    assert code == 0 and got['kraus_max_abs_diff'] <= 1e-12
    assert got['p_exact'] == pytest.approx(1/6, abs=1e-12)
    assert abs(got['p_hat'] - 1/6) <= 5*got['std_error']
    assert np.allclose(density_to_bloch(state_from_json(got['success_state'])), [1, 0, 0], atol=1e-12)

    path = tmp_path / 'counts.csv'
    code, out, _ = invoke(capsys, 'tomo', '--initial', PLUS, '--shots', '1000', '--seed', '2',
                          '--format', 'csv', '--out', str(path))
    assert code == 0 and out == ''
    recs = photonic.records_from_csv(path.read_text())
    assert {r.basis for r in recs} == {'x', 'y', 'z'} and all(r.n_total == 1000 for r in recs)


def test_seeded_runs_are_byte_identical(capsys):
    for argv in (('tomo', '--initial', MIXED, '--shots', '5000', '--seed', '9'),
                 ('photonic', '--initial', MIXED, '--theta0', '20', '--theta1', '70', '--seed', '9'),
                 ('verify', '--suite', 'random', '--n', '2', '--seed', '3')):
        first = invoke(capsys, *argv)
        assert first[0] == 0 and invoke(capsys, *argv) == first


def test_state_from_file(capsys, tmp_path):
    f = tmp_path / 'rho.json'
    f.write_text(json.dumps({'matrix': {'dim': 2, 're': [0.5, 0.5, 0.5, 0.5]}}))
    code, out, _ = invoke(capsys, 'convert', '--initial', str(f), '--target', MIXED)
    assert code == 0 and json.loads(out)['p_max'] == 1.0


@pytest.mark.parametrize('argv, code', [
    ((), 2),
    (('teleport',), 2),
    (('convert', '--initial', MIXED), 2),
    (('region', '--initial', MIXED, '--n', '0'), 2),
    (('convert', '--initial', '{"bloch": [1, 1, 1]}', '--target', PLUS), 1),
    (('convert', '--initial', '{"bloch": [0.1, 0.2]}', '--target', PLUS), 1),
    (('photonic', '--initial', MIXED, '--theta0', '10'), 2),
])
def test_error_exit_codes(capsys, argv, code):
    got, out, err = invoke(capsys, *argv)
    assert got == code and out == ''
    if code == 1:
        assert set(json.loads(err)) == {'error', 'message'}
