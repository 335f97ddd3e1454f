"""Linear-optics simulation of the qubit conversion circuit, plus shot statistics.

The register is polarization (H, V) times a small set of spatial paths. A
register density matrix is ordered polarization-major: index ``pol*n + k`` for
path ``k`` of ``n``. Wave plates act on the polarization of one path, beam
displacers route the two polarizations into different paths, and merging
displacers recombine pairs of paths.
"""
import csv
import io
import dataclasses

import numpy as np

from .core import (ArgumentError, PreconditionError, CoherenceError, PAULIS, check_density, bloch_to_density,
                   numeric_tol)

PATH_LABELS = ('in', 'e0', 'e1', 'd0', 'd1', 'd2', 'd3')
BASES = ('x', 'y', 'z')


class IncompleteDataError(CoherenceError):
    kind = 'incomplete-data'


class EmptyRecordError(CoherenceError):
    kind = 'empty-record'


def hwp_action(angle_deg:float) -> np.ndarray:
    r'''half-wave plate Jones matrix at physical angle ``angle_deg``

    ``|H> -> cos2g|H> + sin2g|V>`` and ``|V> -> sin2g|H> - cos2g|V>``; real, symmetric
    and its own inverse.
    '''
    g = np.deg2rad(angle_deg)
    c, s = np.cos(2*g), np.sin(2*g)
    return np.array([[c, s], [s, -c]], dtype=np.complex128)


@dataclasses.dataclass(frozen=True)
class PathPolState:
    rho: np.ndarray
    path_labels: tuple

    def __post_init__(self):
        n = len(self.path_labels)
        if n not in (1, 2, 4):
            raise ArgumentError(f'register supports 1, 2 or 4 paths, got {n}')
        if self.rho.shape != (2*n, 2*n):
            raise ArgumentError(f'register of {n} paths needs a {2*n}x{2*n} matrix, got {self.rho.shape}')

    @property
    def n_paths(self) -> int:
        return len(self.path_labels)

    def polarization(self) -> np.ndarray:
        """Reduced polarization state (path traced out)."""
        n = self.n_paths
        return np.einsum('akbk->ab', self.rho.reshape(2, n, 2, n))

    def path_resolved(self) -> dict:
        """Unnormalized polarization state found in each path."""
        n = self.n_paths
        R = self.rho.reshape(2, n, 2, n)
        return {lab: R[:, k, :, k].copy() for k, lab in enumerate(self.path_labels)}


@dataclasses.dataclass(frozen=True)
class OpticalElement:
    r'''one optical element

    kinds:
        ``hwp``: wave plate at ``angle`` degrees on ``path`` (``None`` means every path)
        ``bd_expand``: displacer sending H in path k to output 2k and V to output 2k+1
        ``bd_merge``: displacer recombining V from d0 with H from d3 into e0, and V
            from d1 with H from d2 into e1
        ``phase_comp``: sign flip of V in ``path`` (a tilted displacer or plate)
    '''
    kind: str
    angle: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ('hwp', 'bd_expand', 'bd_merge', 'phase_comp'):
            raise ArgumentError(f'unknown optical element {self.kind!r}')
        if self.kind == 'hwp' and self.angle is None:
            raise ArgumentError('a wave plate needs an angle')
        if self.path is not None and self.path not in PATH_LABELS:
            raise ArgumentError(f'unknown path label {self.path!r}')

    def to_json(self) -> dict:
        return {'kind': self.kind, 'angle': self.angle, 'path': self.path}

    @staticmethod
    def from_json(obj:dict) -> 'OpticalElement':
        return OpticalElement(obj['kind'], obj.get('angle'), obj.get('path'))

    def matrix(self, labels:tuple):
        """Transfer matrix on the register and the output path labels."""
        n = len(labels)
        if self.kind in ('hwp', 'phase_comp'):
            J = hwp_action(self.angle) if self.kind == 'hwp' else np.diag([1, -1]).astype(np.complex128)
            if self.path is not None and self.path not in labels:
                raise PreconditionError(f'path {self.path} is not present in {labels}')
            sel = np.array([self.path is None or lab == self.path for lab in labels], dtype=float)
            # polarization-major ordering: (2,n) x (2,n) blocks
            M = np.kron(J, np.diag(sel)) + np.kron(np.eye(2), np.diag(1 - sel))
            return M, labels
        if self.kind == 'bd_expand':
            out = {('in',): ('e0', 'e1'), ('e0', 'e1'): ('d0', 'd1', 'd2', 'd3')}.get(tuple(labels))
            if out is None:
                raise PreconditionError(f'no displacer expands paths {labels}')
            M = np.zeros((2*2*n, 2*n), dtype=np.complex128)
            for k in range(n):
                M[0*2*n + 2*k, 0*n + k] = 1
                M[1*2*n + 2*k + 1, 1*n + k] = 1
            return M, out
        if self.kind == 'bd_merge':
            if tuple(labels) != ('d0', 'd1', 'd2', 'd3'):
                raise PreconditionError(f'merging displacer needs paths d0..d3, got {labels}')
            M = np.zeros((4, 8), dtype=np.complex128)
            H, V = 0, 1
            # (pol_out, path_out) <- (pol_in, path_in), both polarization-major
            for (po, ko), (pi, ki) in [((V, 0), (V, 0)), ((H, 0), (H, 3)), ((V, 1), (V, 1)), ((H, 1), (H, 2))]:
                M[po*2 + ko, pi*4 + ki] = 1
            return M, ('e0', 'e1')
        raise AssertionError(self.kind)

    def apply(self, state:PathPolState) -> PathPolState:
        M, labels = self.matrix(state.path_labels)
        rho = M @ state.rho @ M.conj().T
        lost = np.trace(state.rho).real - np.trace(rho).real
        # the merging displacer drops the modes it does not recombine; they must be empty
        if abs(lost) > 1e-12:
            raise PreconditionError(f'{self.kind} lost weight {lost:.3g} through an unmonitored port')
        return PathPolState(rho, tuple(labels))


def prepare_single_qubit(gamma1_deg:float, gamma2_deg:float) -> np.ndarray:
    r'''plate, full dephasing, plate preparation of a real qubit state

    The angles are polarization rotation angles, so the physical plates sit at
    half of them. The result has Bloch vector
    ``(cos(2 g1) sin(2 g2), 0, cos(2 g1) cos(2 g2))``.

    Parameters:
        gamma1_deg (float): rotation before the dephasing crystal
        gamma2_deg (float): rotation after it

    Returns:
        rho (np.ndarray): shape=(2,2)
    '''
    A = hwp_action(gamma1_deg / 2)
    B = hwp_action(gamma2_deg / 2)
    rho = A @ np.diag([1, 0]).astype(np.complex128) @ A.conj().T
    rho = np.diag(np.diag(rho))
    return B @ rho @ B.conj().T


def preparation_angles(bloch) -> tuple:
    """Angles (degrees) for ``prepare_single_qubit`` reproducing a real Bloch vector."""
    b = np.asarray(bloch, dtype=np.float64)
    if abs(b[1]) > numeric_tol():
        raise ArgumentError('the dephase-and-rotate preparation only reaches states with r_y = 0')
    length = min(1.0, float(np.hypot(b[0], b[2])))
    g1 = np.rad2deg(np.arccos(length)) / 2
    g2 = np.rad2deg(np.arctan2(b[0], b[2])) / 2
    return float(g1), float(g2)


def sio_circuit(theta0_deg:float, theta1_deg:float, post_z:bool=False, post_x:bool=False) -> list:
    r'''ordered element list realizing the diagonal/antidiagonal instrument

    The success operator ``diag(cos t0, cos t1)`` and the flip operator
    ``[[0, sin t1], [sin t0, 0]]`` emerge in the two output paths; optional
    trailing plates apply a phase flip or a bit flip to both paths.
    '''
    ret = [
        OpticalElement('bd_expand'),
        OpticalElement('hwp', theta0_deg/2, 'e0'),
        OpticalElement('hwp', theta1_deg/2, 'e1'),
        OpticalElement('bd_expand'),
        OpticalElement('hwp', 45.0, 'd0'),
        OpticalElement('hwp', 0.0, 'd1'),
        OpticalElement('hwp', 0.0, 'd2'),
        OpticalElement('hwp', 45.0, 'd3'),
        OpticalElement('bd_merge'),
        OpticalElement('hwp', 45.0, 'e0'),
        OpticalElement('phase_comp', None, 'e0'),
        OpticalElement('phase_comp', None, 'e1'),
    ]
    if post_z:
        ret.append(OpticalElement('hwp', 0.0, None))
    if post_x:
        ret.append(OpticalElement('hwp', 45.0, None))
    return ret


def run_circuit(elements, rho:np.ndarray, keep_trace:bool=False):
    """Push a polarization qubit through the elements; optionally return every intermediate state."""
    rho = check_density(rho)
    if rho.shape != (2, 2):
        raise ArgumentError(f'the circuit takes a polarization qubit, got shape {rho.shape}')
    state = PathPolState(np.asarray(rho, dtype=np.complex128), ('in',))
    trace = [state]
    for el in elements:
        state = el.apply(state)
        trace.append(state)
    return (state, trace) if keep_trace else state


def simulate_sio_circuit(theta0_deg:float, theta1_deg:float, rho:np.ndarray):
    r'''simulate the circuit and trace out the paths

    Returns:
        state (PathPolState): final register state over paths e0, e1
        rho_f (np.ndarray): shape=(2,2) polarization state after tracing the paths
    '''
    state = run_circuit(sio_circuit(theta0_deg, theta1_deg), rho)
    return state, state.polarization()


def circuit_kraus(theta0_deg:float, theta1_deg:float):
    t0, t1 = np.deg2rad(theta0_deg), np.deg2rad(theta1_deg)
    K1 = np.diag([np.cos(t0), np.cos(t1)]).astype(np.complex128)
    K2 = np.array([[0, np.sin(t1)], [np.sin(t0), 0]], dtype=np.complex128)
    return K1, K2


@dataclasses.dataclass(frozen=True)
class ShotRecord:
    basis: str
    counts: dict
    n_total: int

    def __post_init__(self):
        if any(int(v) < 0 for v in self.counts.values()):
            raise ArgumentError('counts must be non-negative')
        if sum(int(v) for v in self.counts.values()) != self.n_total:
            raise ArgumentError('counts do not sum to n_total')


def _projectors(basis:str):
    if basis not in BASES:
        raise ArgumentError(f'unknown measurement basis {basis!r}')
    P = PAULIS[BASES.index(basis)]
    eye = np.eye(2)
    return {'+': (eye + P)/2, '-': (eye - P)/2}


def simulate_counts(branch_states, basis:str, n_shots:int, seed=None) -> ShotRecord:
    r'''multinomial detection counts over (branch, outcome) pairs

    Parameters:
        branch_states (list): ``(prob, rho)`` pairs; their probabilities should add to one
        basis (str): ``'x'``, ``'y'`` or ``'z'``
        n_shots (int): total number of detected photons
        seed (int,None,np.random.Generator): random seed

    Returns:
        ret (ShotRecord): outcome keys ``'<branch index><sign>'`` such as ``'0+'``
    '''
    if n_shots <= 0:
        raise ArgumentError(f'need a positive number of shots, got {n_shots}')
    proj = _projectors(basis)
    keys, probs = [], []
    for i, (p, rho) in enumerate(branch_states):
        for sign, P in proj.items():
            keys.append(f'{i}{sign}')
            probs.append(max(0.0, p*float(np.trace(P @ rho).real)))
    probs = np.array(probs)
    total = probs.sum()
    if abs(total - 1) > 1e-9:
        raise ArgumentError(f'branch probabilities add to {total}, expected 1')
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n_shots, probs / total)
    return ShotRecord(basis, {k: int(c) for k, c in zip(keys, counts)}, int(n_shots))


def branch_count(rec:ShotRecord, branch:int=0) -> int:
    return sum(v for k, v in rec.counts.items() if k[:-1] == str(branch))


def estimate_probability(rec:ShotRecord, branch:int=0):
    """Fraction of detections in ``branch`` and its binomial standard error."""
    if rec.n_total <= 0:
        raise EmptyRecordError('no detections recorded')
    p = branch_count(rec, branch) / rec.n_total
    return p, float(np.sqrt(p*(1 - p) / rec.n_total))


def tomography_reconstruct(records, branch:int=0) -> np.ndarray:
    r'''linear-inversion qubit tomography from one record per Pauli basis

    Shot noise can push the raw Bloch vector out of the ball; the estimate is then
    projected back by clipping negative eigenvalues and renormalizing.

    Parameters:
        records (list[ShotRecord]|dict): records for bases x, y and z
        branch (int): which branch's detections to use

    Returns:
        rho (np.ndarray): shape=(2,2) valid density matrix
    '''
    if not isinstance(records, dict):
        records = {r.basis: r for r in records}
    missing = [b for b in BASES if b not in records]
    if missing:
        raise IncompleteDataError(f'missing tomography bases: {missing}')
    r = np.zeros(3)
    for i, b in enumerate(BASES):
        rec = records[b]
        plus = rec.counts.get(f'{branch}+', 0)
        minus = rec.counts.get(f'{branch}-', 0)
        if plus + minus == 0:
            raise EmptyRecordError(f'no detections in branch {branch} for basis {b}')
        r[i] = (plus - minus) / (plus + minus)
    rho = bloch_to_density(r) if np.linalg.norm(r) <= 1 else _clip_to_state(r)
    return rho


def _clip_to_state(r:np.ndarray) -> np.ndarray:
    M = (np.eye(2) + sum(x*P for x, P in zip(r, PAULIS))) / 2
    lam, U = np.linalg.eigh(M)
    lam = np.clip(lam, 0, None)
    lam = lam / lam.sum()
    return (U * lam) @ U.conj().T


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(['basis', 'outcome', 'count'])
    for rec in records:
        for k in sorted(rec.counts):
            w.writerow([rec.basis, k, rec.counts[k]])
    return buf.getvalue()


def records_from_csv(text:str) -> list:
    rows = list(csv.DictReader(io.StringIO(text)))
    if rows and set(rows[0]) != {'basis', 'outcome', 'count'}:
        raise ArgumentError('expected columns basis,outcome,count')
    groups = {}
    for row in rows:
        groups.setdefault(row['basis'], {})[row['outcome']] = int(row['count'])
    return [ShotRecord(b, c, sum(c.values())) for b, c in groups.items()]


def simulate_tomography(rho:np.ndarray, n_shots:int, seed=None) -> list:
    """One shot record per Pauli basis for a single deterministic branch."""
    ss = np.random.SeedSequence(seed)
    return [simulate_counts([(1.0, rho)], b, n_shots, np.random.default_rng(s)) for b, s in zip(BASES, ss.spawn(3))]


def branch_states(state:PathPolState) -> list:
    """``(prob, normalized rho)`` per output path; path e0 carries the diagonal (success) operator."""
    ret = []
    for lab, block in state.path_resolved().items():
        p = float(np.trace(block).real)
        ret.append((p, block / p if p > 1e-15 else np.eye(2) / 2))
    return ret


def angles_for_diagonal(K:np.ndarray) -> tuple:
    r'''plate settings whose success path applies the diagonal operator ``K``

    Parameters:
        K (np.ndarray): ``diag(a, b)`` with real ``0 <= a, b <= 1``

    Returns:
        theta0_deg, theta1_deg (float): with ``cos(theta0) = a`` and ``cos(theta1) = b``
    '''
    K = np.asarray(K)
    if np.abs(K - np.diag(np.diag(K))).max() > numeric_tol():
        raise ArgumentError('the circuit success path only realizes diagonal operators')
    d = np.diag(K)
    if np.abs(d.imag).max() > numeric_tol() or d.real.min() < -numeric_tol() or d.real.max() > 1 + numeric_tol():
        raise ArgumentError('diagonal entries must be real and lie in [0, 1]')
    a, b = np.clip(d.real, 0, 1)
    return float(np.rad2deg(np.arccos(a))), float(np.rad2deg(np.arccos(b)))


def photonic_run(theta0_deg:float, theta1_deg:float, rho:np.ndarray, n_shots:int, seed=None) -> dict:
    r'''simulated experiment: circuit, success-rate counting, and tomography of the success path

    The conversion probability is estimated from computational-basis counts
    over both output paths; the success path is reconstructed from one record
    per Pauli basis.
    '''
    state, rho_f = simulate_sio_circuit(theta0_deg, theta1_deg, rho)
    branches = branch_states(state)
    ss = np.random.SeedSequence(seed)
    s_counts, *s_tomo = ss.spawn(4)
    rec = simulate_counts(branches, 'z', n_shots, np.random.default_rng(s_counts))
    p_hat, err = estimate_probability(rec, 0)
    records = [simulate_counts(branches, b, n_shots, np.random.default_rng(s)) for b, s in zip(BASES, s_tomo)]
    ret = {'p_exact': branches[0][0], 'p_hat': p_hat, 'std_error': err, 'records': records,
           'rho_f': rho_f, 'success_exact': branches[0][1]}
    if branches[0][0] > 0:
        ret['success_estimate'] = tomography_reconstruct(records, 0)
    return ret
