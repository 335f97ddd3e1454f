"""Command-line front end.

Every verb prints JSON (or CSV where a table is natural) to stdout or ``--out``.
Exit status is 0 on success, 1 on a domain error (a JSON object on stderr),
and 2 on a usage error. Angles are given in degrees.
"""
import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .core import (CoherenceError, ArgumentError, state_from_json, state_to_json, density_to_bloch,
                   bloch_to_density, fidelity, check_density, purify)
from . import conversion, measures, assisted, asymptotic, oracle, photonic

VERBS = ('convert', 'region', 'synth', 'assist', 'werner', 'measures', 'asymptotic', 'irreversibility',
         'verify', 'photonic', 'tomo')


class UsageError(Exception):
    pass


def _load_state(text:str|None, flag:str, default=None) -> np.ndarray:
    if text is None:
        if default is not None:
            return default
        raise UsageError(f'{flag} is required')
    if not text.lstrip().startswith('{') and os.path.exists(text):
        with open(text) as fh:
            text = fh.read()
    return state_from_json(text)


def _qubit_bloch(rho:np.ndarray, flag:str) -> np.ndarray:
    if rho.shape != (2, 2):
        raise UsageError(f'{flag} must be a qubit state')
    return density_to_bloch(rho)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + '\n'


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _emit(args, text:str):
    if args.out:
        with open(args.out, 'w') as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(args, header, rows, payload=None) -> str:
    if args.format == 'csv':
        return _csv_text(header, rows)
    if payload is None:
        payload = {'columns': list(header), 'rows': [[float(x) for x in row] for row in rows]}
    return _json_text(payload)


def cmd_convert(args):
    ri = _qubit_bloch(_load_state(args.initial, '--initial'), '--initial')
    si = _qubit_bloch(_load_state(args.target, '--target'), '--target')
    ret = {'p_max': conversion.max_conversion_probability(ri, si)}
    if args.p is not None:
        ret['reachable'] = conversion.is_reachable(ri, si, args.p)
    return _json_text(ret)


def cmd_region(args):
    ri = _qubit_bloch(_load_state(args.initial, '--initial'), '--initial')
    p = 1.0 if args.p is None else args.p
    pts = conversion.reachable_boundary(ri, p, args.n or 256)
    return _table(args, ('s_x', 's_z'), pts)


def cmd_synth(args):
    ri = _qubit_bloch(_load_state(args.initial, '--initial'), '--initial')
    si = _qubit_bloch(_load_state(args.target, '--target'), '--target')
    p = conversion.max_conversion_probability(ri, si) if args.p is None else args.p
    if p <= 0:
        raise conversion.InfeasibleError('target is not reachable with positive probability')
    inst, sol = conversion.synthesize_instrument(ri, si, p)
    out = conversion.success_output(inst, ri)
    return _json_text({'p': p, 'instrument': inst.to_json(), 'solution': sol.to_json(),
                       'completeness_residual': inst.completeness_residual(),
                       'output_error': float(np.abs(out - p*bloch_to_density(si)).max())})


def cmd_assist(args):
    rho = _load_state(args.initial, '--initial')
    si = _qubit_bloch(_load_state(args.target, '--target'), '--target')
    if rho.shape == (2, 2):
        # Bob's marginal given; Alice holds its purification
        rho = purify(rho)
    elif rho.shape != (4, 4):
        raise UsageError("--initial must be Bob's qubit marginal or a two-qubit pure state")
    transcript = assisted.run_assisted_protocol(rho, si)
    transcript['formula_p'] = assisted.assisted_max_probability(transcript['bob_marginal'], si)
    return _json_text(transcript)


def cmd_werner(args):
    if args.q_w is None:
        raise UsageError('--q-w is required')
    mu, total = assisted.werner_protocol_simulate(args.q_w)
    ret = {'q_w': args.q_w, 'steered_state': state_to_json(density_to_bloch(mu)),
           'delta_robustness': measures.c_delta_robustness(mu), 'probability': total}
    if args.target is not None:
        si = _qubit_bloch(_load_state(args.target, '--target'), '--target')
        ret['target'] = [float(x) for x in si]
        ret['p'] = assisted.werner_assisted_probability(args.q_w, si)
    return _json_text(ret)


def cmd_measures(args):
    rho = _load_state(args.initial, '--initial')
    ret = measures.all_measures(rho)
    if args.target is not None:
        sigma = _load_state(args.target, '--target')
        bounds = {}
        for name in ('l1', 'delta_robustness'):
            try:
                bounds[name] = measures.probability_upper_bound(rho, sigma, name)
            except measures.UndefinedBoundError:
                bounds[name] = None
        ret['probability_upper_bounds'] = bounds
    return _json_text(ret)


def cmd_asymptotic(args):
    rho = _load_state(args.initial, '--initial', default=asymptotic.EXAMPLE_RHO)
    if args.target is not None:
        b = asymptotic.rate_bounds(rho, _load_state(args.target, '--target'))
        return _json_text(b.to_json())
    n = args.n or 99
    qs = np.linspace(0, 1, n + 2)[1:-1]
    rows = asymptotic.scan_bounds(qs, rho)
    return _table(args, ('q', 'lower_P', 'lower_ratio', 'upper'), rows)


def cmd_irreversibility(args):
    rows = asymptotic.irreversibility_curve(args.n or asymptotic.CURVE_SAMPLES)
    return _table(args, ('q', 'Cc', 'Cd'), rows)


def cmd_verify(args):
    cfg = oracle.OracleConfig(seed=args.seed or 0)
    if args.suite == 'qubit-grid':
        queries = oracle.grid_queries(args.n or 15)
    elif args.suite == 'random':
        queries = oracle.random_queries(args.n or 20, args.seed)
    else:
        raise UsageError(f'unknown suite {args.suite!r}, choose qubit-grid or random')
    report = oracle.verify_queries(queries, cfg)
    return _json_text({'suite': args.suite, 'seed': args.seed, 'tolerance': oracle.VERIFY_TOL,
                       'all_pass': all(r['pass'] for r in report), 'results': report})


def _angles(args):
    if args.theta0 is None or args.theta1 is None:
        raise UsageError('--theta0 and --theta1 are required')
    return args.theta0, args.theta1


def cmd_photonic(args):
    t0, t1 = _angles(args)
    rho = check_density(_load_state(args.initial, '--initial'))
    run = photonic.photonic_run(t0, t1, rho, args.shots or 10**5, args.seed)
    K1, K2 = photonic.circuit_kraus(t0, t1)
    kraus_out = K1 @ rho @ K1.conj().T + K2 @ rho @ K2.conj().T
    ret = {'theta0': t0, 'theta1': t1, 'circuit': [e.to_json() for e in photonic.sio_circuit(t0, t1)],
           'rho_f': state_to_json(run['rho_f']), 'kraus_max_abs_diff': float(np.abs(run['rho_f'] - kraus_out).max()),
           'p_exact': run['p_exact'], 'p_hat': run['p_hat'], 'std_error': run['std_error'],
           'success_state': state_to_json(density_to_bloch(run['success_exact']))}
    if 'success_estimate' in run:
        est = run['success_estimate']
        ret['success_estimate'] = state_to_json(density_to_bloch(est))
        ret['success_fidelity'] = fidelity(est, run['success_exact'])
    return _json_text(ret)


def cmd_tomo(args):
    rho = check_density(_load_state(args.initial, '--initial'))
    records = photonic.simulate_tomography(rho, args.shots or 10**5, args.seed)
    if args.format == 'csv':
        return photonic.records_to_csv(records)
    est = photonic.tomography_reconstruct(records)
    return _json_text({'estimate': state_to_json(density_to_bloch(est)), 'fidelity': fidelity(est, rho),
                       'counts': {r.basis: r.counts for r in records}})


COMMANDS = {v: globals()[f'cmd_{v}'] for v in VERBS}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog='coherence', description='Qubit coherence conversion toolkit.')
    ap.add_argument('verb', choices=VERBS)
    ap.add_argument('--initial', help='state JSON ({"bloch": [...]} or {"matrix": ...}) or a path to one')
    ap.add_argument('--target', help='target state JSON or path')
    ap.add_argument('--p', type=float, help='success probability')
    ap.add_argument('--n', type=int, help='number of samples or grid points')
    ap.add_argument('--seed', type=int, help='random seed')
    ap.add_argument('--q-w', dest='q_w', type=float, help='Werner weight')
    ap.add_argument('--theta0', type=float, help='circuit angle in degrees')
    ap.add_argument('--theta1', type=float, help='circuit angle in degrees')
    ap.add_argument('--shots', type=int, help='detections per measurement setting')
    ap.add_argument('--suite', default='qubit-grid', help='verification suite: qubit-grid or random')
    ap.add_argument('--out', help='write output here instead of stdout')
    ap.add_argument('--format', choices=('json', 'csv'), default='json')
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    for flag in ('n', 'shots'):
        v = getattr(args, flag)
        if v is not None and v <= 0:
            ap.print_usage(sys.stderr)
            sys.stderr.write(f'--{flag} must be positive\n')
            return 2
    try:
        _emit(args, COMMANDS[args.verb](args))
    except (UsageError, ArgumentError) as e:
        ap.print_usage(sys.stderr)
        sys.stderr.write(f'{e}\n')
        return 2
    except CoherenceError as e:
        sys.stderr.write(json.dumps({'error': e.kind, 'message': str(e)}) + '\n')
        return 1
    return 0


def main():
    sys.exit(run())
