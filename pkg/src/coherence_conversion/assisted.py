"""Assisted conversion: Alice holds the other half of Bob's qubit and steers it.

Covers the pure-state (purification) case, the Werner-state protocol, the
quantum-incoherence test, and a witness measurement that changes Bob's
conditional state whenever the joint state is correlated.
"""
import dataclasses
import itertools

import numpy as np

from .core import (PreconditionError, ArgumentError, DimensionError, PAULI_X, PAULI_Y, PAULI_Z, numeric_tol,
                   check_bloch, check_density, bloch_to_density, density_to_bloch, partial_trace,
                   hermitian_eigensystem, trace_distance, pure_state, state_to_json)
from .conversion import max_conversion_probability, synthesize_instrument, branch_output
from .measures import c_delta_robustness

PHI_PLUS = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)


@dataclasses.dataclass(frozen=True)
class PureDecomposition:
    weight_q: float
    psi1: np.ndarray
    psi2: np.ndarray

    def recombine(self) -> np.ndarray:
        return self.weight_q*self.psi1 + (1 - self.weight_q)*self.psi2


@dataclasses.dataclass(frozen=True)
class AliceMeasurement:
    povm_elements: tuple
    labels: tuple

    def to_json(self) -> dict:
        return {'labels': list(self.labels),
                'elements': [{'re': np.real(m).tolist(), 'im': np.imag(m).tolist()} for m in self.povm_elements]}


def _check_q_w(q_w:float) -> float:
    q_w = float(q_w)
    if not (0 <= q_w <= 1):
        raise ArgumentError(f'Werner weight must lie in [0,1], got {q_w}')
    return q_w


def assisted_max_probability(bob_marginal, target, tol:float=1e-12) -> float:
    r'''optimal one-way assisted conversion probability when Alice holds a purification

    depends on the marginal only through ``|r_z|``

    Parameters:
        bob_marginal (np.ndarray): Bloch vector of Bob's reduced state
        target (np.ndarray): Bloch vector of the target

    Returns:
        ret (float)
    '''
    rb = check_bloch(bob_marginal)
    si = check_bloch(target)
    s2 = si[0]**2 + si[1]**2
    if s2 <= tol*tol:
        return 1.0
    return float(min(1.0, (1 - abs(rb[2])) * (1 + np.sqrt(max(0.0, 1 - s2))) / s2))


def optimal_pure_decomposition(bob_marginal, tol:float=1e-12) -> PureDecomposition:
    """Equal-weight pair of pure states sharing the marginal's z component."""
    v = check_bloch(bob_marginal)
    rz = float(np.clip(v[2], -1, 1))
    rho_t = np.sqrt(max(0.0, 1 - rz*rz))
    r = float(np.hypot(v[0], v[1]))
    if rho_t <= tol or np.linalg.norm(v) >= 1 - tol:
        # pole or already pure: the state is its own decomposition
        unit = v / np.linalg.norm(v) if np.linalg.norm(v) > 0 else np.array([0.0, 0.0, 1.0])
        return PureDecomposition(1.0, unit, unit.copy())
    gamma = np.arctan2(v[1], v[0]) if r > 0 else 0.0
    beta = np.arccos(min(1.0, r / rho_t))
    t = np.array([rho_t*np.cos(gamma + beta), rho_t*np.sin(gamma + beta), rz])
    u = np.array([rho_t*np.cos(gamma - beta), rho_t*np.sin(gamma - beta), rz])
    return PureDecomposition(0.5, t, u)


def _pure_vector(rho_ab:np.ndarray) -> np.ndarray:
    rho_ab = np.asarray(rho_ab, dtype=np.complex128)
    if rho_ab.ndim == 1:
        return rho_ab / np.linalg.norm(rho_ab)
    if rho_ab.shape != (4, 4):
        raise DimensionError(f'expected a two-qubit state, got shape {rho_ab.shape}')
    lam, vec = hermitian_eigensystem(rho_ab)
    if abs(lam[-1] - 1) > 1e-8:
        raise PreconditionError(f'joint state is not pure (largest eigenvalue {lam[-1]:.10g})')
    return vec[:, -1]


def _bloch_pure_vector(b) -> np.ndarray:
    lam, vec = hermitian_eigensystem(bloch_to_density(np.asarray(b) / np.linalg.norm(b)))
    return vec[:, -1]


def conditional_states(rho_ab:np.ndarray, povm, dims=(2, 2)):
    """Outcome probabilities and Bob's normalized conditional states for Alice's POVM."""
    rho_ab = np.asarray(rho_ab, dtype=np.complex128)
    if rho_ab.ndim == 1:
        rho_ab = np.outer(rho_ab, rho_ab.conj())
    dA, dB = dims
    ret = []
    for M in povm:
        tmp = partial_trace(np.kron(M, np.eye(dB)) @ rho_ab, dims, keep='B')
        prob = float(np.trace(tmp).real)
        ret.append((prob, tmp / prob if prob > 1e-15 else None))
    return ret


def alice_measurement_for(purification:np.ndarray, dec:PureDecomposition, tol:float=1e-8) -> AliceMeasurement:
    r'''projective measurement on Alice steering Bob into the decomposition ``dec``

    Parameters:
        purification (np.ndarray): pure two-qubit state, vector of length 4 or 4x4 density matrix
        dec (PureDecomposition): target ensemble of Bob's marginal

    Returns:
        ret (AliceMeasurement): elements ordered as (psi1, psi2)
    '''
    psi = _pure_vector(purification)
    Psi = psi.reshape(2, 2)
    rho_b = Psi.T @ Psi.conj()
    if np.abs(rho_b - bloch_to_density(dec.recombine())).max() > tol:
        raise PreconditionError('purification marginal does not match the decomposition')
    lam = hermitian_eigensystem(rho_b)[0]
    if lam[0] <= tol or dec.weight_q >= 1 - tol:
        # Bob's marginal is pure, the joint state is a product: any basis steers trivially
        return AliceMeasurement((np.diag([1, 0]).astype(np.complex128), np.diag([0, 1]).astype(np.complex128)),
                                ('psi1', 'psi2'))
    vecs = []
    for q, b in ((dec.weight_q, dec.psi1), (1 - dec.weight_q, dec.psi2)):
        # (<a| x 1)|Psi> = Psi^T conj(a) must equal sqrt(q)|phi> up to phase
        conj_a = np.linalg.solve(Psi.T, np.sqrt(q) * _bloch_pure_vector(b))
        vecs.append(conj_a.conj())
    elements = tuple(np.outer(a, a.conj()) for a in vecs)
    if np.abs(sum(elements) - np.eye(2)).max() > tol:
        raise PreconditionError('steering measurement is not complete; decomposition inconsistent with the state')
    return AliceMeasurement(elements, ('psi1', 'psi2'))


def run_assisted_protocol(purification:np.ndarray, target) -> dict:
    r'''simulate measure-then-convert and return a transcript

    Alice measures, Bob runs the optimal stochastic conversion on his conditional
    state. The achieved probability is read off the simulated success branches.
    '''
    psi = _pure_vector(purification)
    si = check_bloch(target)
    rho_ab = np.outer(psi, psi.conj())
    rb = density_to_bloch(partial_trace(rho_ab, (2, 2), keep='B'))
    dec = optimal_pure_decomposition(rb)
    meas = alice_measurement_for(psi, dec)
    branches = []
    total = 0.0
    for label, (prob, state) in zip(meas.labels, conditional_states(rho_ab, meas.povm_elements)):
        entry = {'outcome': label, 'weight': prob, 'success_probability': 0.0, 'instrument': None}
        if state is not None and prob > 1e-15:
            b = density_to_bloch(state)
            b = b / max(1.0, np.linalg.norm(b))
            p = max_conversion_probability(b, si)
            entry['bob_state'] = [float(x) for x in b]
            if p > 0:
                inst, _ = synthesize_instrument(b, si, p)
                got = float(np.trace(branch_output(inst.success, state)).real)
                entry['success_probability'] = got
                entry['instrument'] = inst.to_json()
                total += prob * got
        branches.append(entry)
    return {'bob_marginal': [float(x) for x in rb], 'target': [float(x) for x in si],
            'decomposition': {'q': dec.weight_q, 'psi1': state_to_json(dec.psi1), 'psi2': state_to_json(dec.psi2)},
            'measurement': meas.to_json(), 'branches': branches, 'probability': total}


def assisted_protocol_simulate(purification:np.ndarray, target) -> float:
    return run_assisted_protocol(purification, target)['probability']


def werner_state(q_w:float) -> np.ndarray:
    q_w = _check_q_w(q_w)
    return q_w*np.outer(PHI_PLUS, PHI_PLUS.conj()) + (1 - q_w)*np.eye(4)/4


def werner_assisted_probability(q_w:float, target, tol:float=1e-12) -> float:
    r'''assisted conversion probability from a Werner state, either 0 or 1

    The target is reachable with certainty iff its dephasing robustness
    ``s / sqrt(1 - s_z^2)`` does not exceed ``q_w``, the robustness of the best
    conditional state Bob can be steered into.
    '''
    q_w = _check_q_w(q_w)
    si = check_bloch(target)
    s = float(np.hypot(si[0], si[1]))
    if s <= tol:
        return 1.0
    return 1.0 if s <= q_w*np.sqrt(max(0.0, 1 - si[2]**2)) + tol else 0.0


def werner_protocol_simulate(q_w:float):
    """Alice measures in the |+>,|-> basis, Bob corrects the minus outcome with sigma_z.

    Returns Bob's final state and the probability of ending in it.
    """
    rho = werner_state(q_w)
    plus = pure_state([1, 1])
    minus = pure_state([1, -1])
    out = np.zeros((2, 2), dtype=np.complex128)
    total = 0.0
    for (prob, state), fix in zip(conditional_states(rho, (plus, minus)), (np.eye(2), PAULI_Z)):
        out += prob * (fix @ state @ fix.conj().T)
        total += prob
    return out / total, float(total)


def is_quantum_incoherent(rho_ab:np.ndarray, dims=(2, 2), tol:float|None=None) -> bool:
    """Block diagonal in Bob's incoherent basis (every off-diagonal B block vanishes)."""
    tol = numeric_tol() if tol is None else tol
    dA, dB = dims
    rho_ab = np.asarray(rho_ab)
    if rho_ab.shape != (dA*dB, dA*dB):
        raise DimensionError(f'state of shape {rho_ab.shape} does not match dims {dims}')
    blocks = rho_ab.reshape(dA, dB, dA, dB).transpose(1, 3, 0, 2)
    off = ~np.eye(dB, dtype=bool)
    return bool(np.abs(blocks[off]).max(initial=0.0) <= tol)


def icosphere_directions(frequency:int=3) -> np.ndarray:
    """Vertices of a geodesic icosphere (92 unit vectors at the default frequency)."""
    g = (1 + np.sqrt(5)) / 2
    base = np.array([[-1, g, 0], [1, g, 0], [-1, -g, 0], [1, -g, 0], [0, -1, g], [0, 1, g],
                     [0, -1, -g], [0, 1, -g], [g, 0, -1], [g, 0, 1], [-g, 0, -1], [-g, 0, 1]], dtype=np.float64)
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    edge = min(np.linalg.norm(base[0] - base[j]) for j in range(1, 12))
    faces = [f for f in itertools.combinations(range(12), 3)
             if all(abs(np.linalg.norm(base[a] - base[b]) - edge) < 1e-9 for a, b in itertools.combinations(f, 2))]
    points = []
    for a, b, c in faces:
        for i in range(frequency + 1):
            for j in range(frequency + 1 - i):
                x = (i*base[a] + j*base[b] + (frequency - i - j)*base[c]) / frequency
                points.append(x / np.linalg.norm(x))
    points = np.array(points)
    keep = []
    for x in points:
        if all(np.linalg.norm(x - y) > 1e-9 for y in keep):
            keep.append(x)
    return np.array(keep)


def correlation_advantage_witness(rho_ab:np.ndarray, dims=(2, 2), tol:float=1e-8):
    r'''two-outcome measurement on Alice that changes Bob's conditional state

    Sweeps projectors along icosphere directions. Among those that move Bob's
    state by more than ``tol`` in trace distance, the one maximizing the gain in
    dephasing robustness is preferred.

    Returns:
        ret (AliceMeasurement|None): None for product states
    '''
    rho_ab = check_density(rho_ab)
    dA, dB = dims
    if dA != 2:
        raise DimensionError('witness search is implemented for a qubit on Alice\'s side')
    rho_a = partial_trace(rho_ab, dims, keep='A')
    rho_b = partial_trace(rho_ab, dims, keep='B')
    if np.abs(rho_ab - np.kron(rho_a, rho_b)).max() <= tol:
        return None
    base = c_delta_robustness(rho_b)
    best, best_key = None, None
    for n in icosphere_directions():
        M = 0.5 * (np.eye(2) + n[0]*PAULI_X + n[1]*PAULI_Y + n[2]*PAULI_Z)
        povm = (M, np.eye(2) - M)
        conds = conditional_states(rho_ab, povm, dims)
        dist = max((trace_distance(s, rho_b) for p, s in conds if s is not None), default=0.0)
        if dist <= tol:
            continue
        gain = max(c_delta_robustness(s) for p, s in conds if s is not None) - base
        key = (round(gain, 12), dist)
        if best_key is None or key > best_key:
            best, best_key = povm, key
    if best is None:
        return None
    return AliceMeasurement(best, ('M', '1-M'))
