"""Small dense complex linear algebra and the qubit state data model.

Density operators are plain ``np.ndarray`` of shape ``(d, d)``; Bloch vectors
are length-3 real arrays. Everything here is a pure function.
"""
import os
import json
import dataclasses

import numpy as np

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)

MAX_DIM = 8
JACOBI_THRESHOLD = 1e-14


def numeric_tol() -> float:
    """Global validation tolerance, overridable through ``COHERENCE_NUMERIC_TOL``."""
    raw = os.environ.get('COHERENCE_NUMERIC_TOL')
    if raw is None:
        return 1e-10
    try:
        ret = float(raw)
    except ValueError:
        raise ArgumentError(f'COHERENCE_NUMERIC_TOL is not a number: {raw!r}')
    if not (ret > 0):
        raise ArgumentError('COHERENCE_NUMERIC_TOL must be positive')
    return ret


class CoherenceError(ValueError):
    """Base class of every domain error raised by this package."""
    kind = 'domain-error'


class InvalidStateError(CoherenceError):
    kind = 'invalid-state'


class DimensionError(CoherenceError):
    kind = 'dimension'


class PreconditionError(CoherenceError):
    kind = 'precondition'


class ArgumentError(CoherenceError):
    kind = 'argument'


@dataclasses.dataclass(frozen=True)
class Bloch:
    """Qubit Bloch vector ``(rx, ry, rz)``; ``r`` is the transverse radius."""
    x: float
    y: float
    z: float

    @property
    def r(self) -> float:
        return float(np.hypot(self.x, self.y))

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def of(v) -> 'Bloch':
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if v.shape != (3,):
            raise DimensionError(f'Bloch vector needs 3 components, got {v.shape[0]}')
        ret = Bloch(float(v[0]), float(v[1]), float(v[2]))
        check_bloch(ret.vec)
        return ret


def check_bloch(v, tol:float|None=None) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise DimensionError(f'Bloch vector needs 3 components, got {v.shape[0]}')
    tol = numeric_tol() if tol is None else tol
    if not np.all(np.isfinite(v)):
        raise InvalidStateError('Bloch vector has non-finite components')
    if np.dot(v, v) > 1 + tol:
        raise InvalidStateError(f'Bloch vector norm {np.linalg.norm(v):.12g} exceeds 1')
    return v


def check_density(rho:np.ndarray, tol:float|None=None) -> np.ndarray:
    r'''validate a density operator

    Parameters:
        rho (np.ndarray): shape=(d,d)
        tol (float): absolute tolerance, defaults to the global numeric policy

    Returns:
        ret (np.ndarray): the same matrix as complex128
    '''
    tol = numeric_tol() if tol is None else tol
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
        raise DimensionError(f'density operator must be square, got shape {rho.shape}')
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError('density operator has non-finite entries')
    if np.abs(rho - rho.conj().T).max() > tol:
        raise InvalidStateError('density operator is not Hermitian')
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidStateError(f'density operator trace {np.trace(rho).real:.12g} != 1')
    if rho.shape[0] <= MAX_DIM:
        lam_min = hermitian_eigensystem(rho, tol=tol)[0][0]
    else:
        lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -tol:
        raise InvalidStateError(f'density operator has negative eigenvalue {lam_min:.3g}')
    return rho


def bloch_to_density(b) -> np.ndarray:
    v = b.vec if isinstance(b, Bloch) else check_bloch(b)
    return 0.5 * (np.eye(2, dtype=np.complex128) + v[0]*PAULI_X + v[1]*PAULI_Y + v[2]*PAULI_Z)


def density_to_bloch(rho:np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (2, 2):
        raise DimensionError(f'Bloch representation needs a qubit, got shape {rho.shape}')
    # Tr(rho sigma_i) written out
    return np.array([2*rho[0, 1].real, -2*rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real])


def dephase(rho:np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    return np.diag(np.diag(rho))


def _fix_phase(vec:np.ndarray) -> np.ndarray:
    # first component with nonnegligible modulus made real positive
    for i in range(vec.shape[1]):
        col = vec[:, i]
        ind = np.nonzero(np.abs(col) > 1e-12)[0]
        if len(ind):
            z = col[ind[0]]
            vec[:, i] = col * (abs(z) / z)
    return vec


def _eigensystem_2(M:np.ndarray):
    a = M[0, 0].real
    d = M[1, 1].real
    b = M[0, 1]
    mean = (a + d) / 2
    rad = np.hypot((a - d) / 2, abs(b))
    lam = np.array([mean - rad, mean + rad])
    if abs(b) <= 1e-300:
        vec = np.eye(2, dtype=np.complex128) if a <= d else np.array([[0, 1], [1, 0]], dtype=np.complex128)
        return lam, vec
    vec = np.zeros((2, 2), dtype=np.complex128)
    for i, x in enumerate(lam):
        u = np.array([b, x - a])
        w = np.array([x - d, np.conj(b)])
        v = u if np.linalg.norm(u) >= np.linalg.norm(w) else w
        vec[:, i] = v / np.linalg.norm(v)
    return lam, vec


def _jacobi(M:np.ndarray, threshold:float=JACOBI_THRESHOLD, max_sweep:int=100):
    A = M.copy()
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    scale = max(np.abs(A).max(), 1.0)
    mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweep):
        off = np.sqrt(np.sum(np.abs(A[mask])**2))
        if off <= threshold * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # phase shift on column q makes the pivot real, then a real Givens rotation zeroes it
                phase = np.conj(apq) / abs(apq)
                theta = (A[q, q].real - A[p, p].real) / (2 * abs(apq))
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta*theta + 1))
                c = 1 / np.sqrt(t*t + 1)
                s = t * c
                U = np.eye(n, dtype=np.complex128)
                U[p, p] = c
                U[p, q] = s
                U[q, p] = -s * phase
                U[q, q] = c * phase
                A = U.conj().T @ A @ U
                A[p, q] = 0
                A[q, p] = 0
                V = V @ U
    lam = np.diag(A).real.copy()
    return lam, V


def hermitian_eigensystem(M:np.ndarray, tol:float|None=None):
    r'''eigen-decomposition of a small Hermitian matrix

    closed form for dimension 2, cyclic Jacobi up to dimension 8

    Parameters:
        M (np.ndarray): shape=(d,d), Hermitian
        tol (float): Hermiticity tolerance

    Returns:
        lam (np.ndarray): shape=(d,), ascending
        vec (np.ndarray): shape=(d,d), columns are eigenvectors, first nonzero component real positive
    '''
    tol = numeric_tol() if tol is None else tol
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f'expected a square matrix, got shape {M.shape}')
    if M.shape[0] > MAX_DIM:
        raise DimensionError(f'dimension {M.shape[0]} exceeds the supported maximum {MAX_DIM}')
    if np.abs(M - M.conj().T).max() > tol:
        raise PreconditionError('matrix is not Hermitian')
    M = (M + M.conj().T) / 2
    if M.shape[0] == 1:
        return M[0, 0].real.reshape(1), np.ones((1, 1), dtype=np.complex128)
    if M.shape[0] == 2:
        lam, vec = _eigensystem_2(M)
    else:
        lam, vec = _jacobi(M)
    ind = np.argsort(lam, kind='stable')
    return lam[ind], _fix_phase(vec[:, ind])


def _entropy_of(lam:np.ndarray) -> float:
    lam = lam[lam > 0]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def von_neumann_entropy(rho:np.ndarray) -> float:
    lam = hermitian_eigensystem(rho)[0]
    return _entropy_of(np.clip(lam, 0, None))


def binary_entropy(x:float) -> float:
    x = float(x)
    if not (-1e-15 <= x <= 1 + 1e-15):
        raise ArgumentError(f'binary entropy needs x in [0,1], got {x}')
    x = min(max(x, 0.0), 1.0)
    return _entropy_of(np.array([x, 1 - x]))


def matrix_sqrt_psd(M:np.ndarray) -> np.ndarray:
    lam, vec = hermitian_eigensystem(M)
    return (vec * np.sqrt(np.clip(lam, 0, None))) @ vec.conj().T


def trace_distance(rho:np.ndarray, sigma:np.ndarray) -> float:
    lam = hermitian_eigensystem(np.asarray(rho) - np.asarray(sigma))[0]
    return float(min(1.0, 0.5 * np.abs(lam).sum()))


def fidelity(rho:np.ndarray, sigma:np.ndarray) -> float:
    r'''Uhlmann fidelity (squared convention), ``(Tr|sqrt(rho) sqrt(sigma)|)^2``'''
    sr = matrix_sqrt_psd(rho)
    inner = sr @ np.asarray(sigma) @ sr
    lam = hermitian_eigensystem((inner + inner.conj().T) / 2)[0]
    ret = np.sum(np.sqrt(np.clip(lam, 0, None)))**2
    return float(min(1.0, max(0.0, ret)))


def partial_trace(rho:np.ndarray, dims:tuple[int, int], keep:str|int='B') -> np.ndarray:
    dA, dB = int(dims[0]), int(dims[1])
    rho = np.asarray(rho)
    if rho.shape != (dA*dB, dA*dB):
        raise DimensionError(f'state of shape {rho.shape} does not match dims {dims}')
    tmp = rho.reshape(dA, dB, dA, dB)
    if keep in ('A', 0):
        return np.einsum('ijkj->ik', tmp)
    if keep in ('B', 1):
        return np.einsum('ijil->jl', tmp)
    raise ArgumentError(f'unknown subsystem {keep!r}, expected "A" or "B"')


def purify(rho:np.ndarray) -> np.ndarray:
    """Two-qubit pure state (as a density matrix, A then B) whose B-marginal is ``rho``."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (2, 2):
        raise DimensionError(f'purify expects a qubit, got shape {rho.shape}')
    lam, vec = hermitian_eigensystem(rho)
    lam = np.clip(lam, 0, None)
    psi = sum(np.sqrt(lam[i]) * np.kron(np.eye(2)[i], vec[:, i]) for i in range(2))
    return np.outer(psi, psi.conj())


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def state_to_json(rho_or_bloch) -> dict:
    x = np.asarray(rho_or_bloch)
    if x.shape == (3,) and np.isrealobj(x):
        return {'bloch': [float(v) for v in x]}
    x = np.asarray(x, dtype=np.complex128)
    return {'matrix': {'dim': int(x.shape[0]), 're': [float(v) for v in x.real.reshape(-1)],
                       'im': [float(v) for v in x.imag.reshape(-1)]}}


def state_from_json(obj) -> np.ndarray:
    """Parse ``{"bloch": [...]}`` or ``{"matrix": {...}}`` (dict or JSON text) into a density matrix."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as e:
            raise ArgumentError(f'state is not valid JSON: {e}')
    if not isinstance(obj, dict):
        raise ArgumentError('state JSON must be an object')
    if 'bloch' in obj:
        return bloch_to_density(check_bloch(obj['bloch']))
    if 'matrix' in obj:
        m = obj['matrix']
        try:
            dim = int(m['dim'])
            re = np.asarray(m['re'], dtype=np.float64)
            im = np.asarray(m.get('im', np.zeros(dim*dim)), dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise ArgumentError(f'malformed matrix state: {e}')
        if re.size != dim*dim or im.size != dim*dim:
            raise DimensionError(f'matrix state needs {dim*dim} entries')
        return check_density((re + 1j*im).reshape(dim, dim))
    raise ArgumentError('state JSON needs a "bloch" or "matrix" key')
