"""Qubit state conversion under strictly incoherent operations.

Reachability test, optimal success probability, and an explicit construction of
Kraus instruments that realize a reachable conversion.

The construction works in a reduced frame where both Bloch vectors lie in the
x-z half plane with non-negative x and z components. The reduction uses only
free unitaries (diagonal phases and the bit flip), so it is undone at the end by
conjugating each Kraus operator.
"""
import dataclasses

import numpy as np

from .core import (CoherenceError, PreconditionError, ArgumentError, DimensionError, numeric_tol, check_bloch,
                   check_density, bloch_to_density, PAULI_X)

REACH_TOL = 1e-12
KRAUS_KINDS = ('diagonal', 'antidiagonal', 'destroy-to-0', 'destroy-to-1')


class InfeasibleError(CoherenceError):
    kind = 'infeasible'


@dataclasses.dataclass(frozen=True)
class SioKraus:
    kind: str
    matrix: np.ndarray

    def to_json(self) -> dict:
        m = np.asarray(self.matrix, dtype=np.complex128)
        return {'kind': self.kind, 're': m.real.tolist(), 'im': m.imag.tolist()}

    @staticmethod
    def from_json(obj) -> 'SioKraus':
        try:
            m = np.asarray(obj['re'], dtype=np.float64) + 1j*np.asarray(obj.get('im', 0), dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise ArgumentError(f'malformed Kraus operator: {e}')
        if m.shape != (2, 2):
            raise DimensionError(f'Kraus operator must be 2x2, got {m.shape}')
        kind = obj.get('kind', kraus_kind(m))
        if kind != kraus_kind(m):
            raise ArgumentError(f'Kraus operator tagged {kind!r} has structure {kraus_kind(m)!r}')
        return SioKraus(kind, m)


@dataclasses.dataclass(frozen=True)
class SioInstrument:
    success: tuple
    failure: tuple = ()

    def completeness_residual(self) -> float:
        tmp = sum((k.matrix.conj().T @ k.matrix for k in self.success + self.failure), np.zeros((2, 2)))
        return float(np.abs(tmp - np.eye(2)).max())

    def to_json(self) -> dict:
        return {'success': [k.to_json() for k in self.success], 'failure': [k.to_json() for k in self.failure]}

    @staticmethod
    def from_json(obj) -> 'SioInstrument':
        if isinstance(obj, list):
            return SioInstrument(tuple(SioKraus.from_json(x) for x in obj))
        return SioInstrument(tuple(SioKraus.from_json(x) for x in obj.get('success', [])),
                             tuple(SioKraus.from_json(x) for x in obj.get('failure', [])))


@dataclasses.dataclass(frozen=True)
class SynthesisSolution:
    t: float
    theta: float
    phi: float
    mix_weight: float
    incoherent_tail: np.ndarray
    applied_symmetries: tuple

    def to_json(self) -> dict:
        return {'t': self.t, 'theta': self.theta, 'phi': self.phi, 'mix_weight': self.mix_weight,
                'incoherent_tail': [float(x) for x in self.incoherent_tail],
                'applied_symmetries': [dict(x) for x in self.applied_symmetries]}


def _transverse(v):
    return float(np.hypot(v[0], v[1]))


def is_incoherent_kraus(K:np.ndarray, zero:float=1e-12) -> bool:
    # every column has at most one nonzero entry
    nz = np.abs(np.asarray(K)) > zero
    return bool(np.all(nz.sum(axis=0) <= 1))


def is_strictly_incoherent_kraus(K:np.ndarray, zero:float=1e-12) -> bool:
    nz = np.abs(np.asarray(K)) > zero
    return bool(np.all(nz.sum(axis=0) <= 1) and np.all(nz.sum(axis=1) <= 1))


def kraus_kind(K:np.ndarray, zero:float=0.0) -> str:
    K = np.asarray(K)
    nz = np.abs(K) > zero
    if nz.sum() == 1:
        return 'destroy-to-0' if nz[0].any() else 'destroy-to-1'
    if not (nz[0, 1] or nz[1, 0]):
        return 'diagonal'
    if not (nz[0, 0] or nz[1, 1]):
        return 'antidiagonal'
    raise PreconditionError('matrix is not strictly incoherent')


def coherence_rank(psi, zero:float=1e-12) -> int:
    psi = np.asarray(psi).reshape(-1)
    return int(np.sum(np.abs(psi) > zero))


def _split_conditions(r, rz, s, sz, p):
    """Left-hand minus right-hand side of the ellipsoid and cylinder inequalities."""
    ellipsoid = r*r*sz*sz + (1 - rz*rz)*s*s - r*r
    arz = abs(rz)
    if p < 1 - arz:
        # below this probability the cylinder contains the ellipsoid
        cylinder = (1 - rz*rz)*s*s - r*r
    else:
        cylinder = p*p*s*s - r*r/(1 + arz)*(2*p - (1 - arz))
    return ellipsoid, cylinder


def is_reachable(initial, target, p:float, tol:float=REACH_TOL) -> bool:
    r'''whether ``target`` can be reached from ``initial`` with success probability ``p``

    Parameters:
        initial (np.ndarray): Bloch vector
        target (np.ndarray): Bloch vector
        p (float): demanded probability in (0,1]
        tol (float): slack in favour of reachability

    Returns:
        ret (bool)
    '''
    ri = check_bloch(initial)
    si = check_bloch(target)
    if not (0 < p <= 1 + tol):
        raise ArgumentError(f'probability must lie in (0,1], got {p}')
    r, s = _transverse(ri), _transverse(si)
    if r <= tol:
        return s <= tol
    ellipsoid, cylinder = _split_conditions(r, ri[2], s, si[2], p)
    return bool(ellipsoid <= tol and cylinder <= tol)


def max_conversion_probability(initial, target, tol:float=REACH_TOL) -> float:
    ri = check_bloch(initial)
    si = check_bloch(target)
    r, s = _transverse(ri), _transverse(si)
    if s <= tol:
        return 1.0
    if r <= tol:
        return 0.0
    rz = ri[2]
    if r*r*si[2]**2 + (1 - rz*rz)*s*s > r*r + tol:
        return 0.0
    arz = abs(rz)
    radicand = 1 - s*s*(1 - rz)*(1 + rz)/(r*r)
    # targets within rounding of the ellipsoid surface sit on it; the square root would amplify 1e-16 to 1e-8
    root = np.sqrt(radicand) if radicand > tol else 0.0
    return float(min(r*r / ((1 + arz)*s*s) * (1 + root), 1.0))


def max_transverse(initial, p:float) -> float:
    """Largest reachable transverse radius at success probability ``p``."""
    ri = check_bloch(initial)
    r, arz = _transverse(ri), abs(ri[2])
    if r == 0:
        return 0.0
    if p < 1 - arz:
        return r / np.sqrt(1 - arz*arz)
    return r / np.sqrt(1 + arz) * np.sqrt(max(0.0, 2*p - (1 - arz))) / p


def reachable_boundary(initial, p:float, n:int) -> np.ndarray:
    r'''sample the boundary of the reachable x-z cross-section

    The section is the ellipse of the first condition cut by the vertical lines
    ``|s_x| = max_transverse(initial, p)``.

    Returns:
        ret (np.ndarray): shape=(n,2) columns ``(s_x, s_z)``, empty when the initial state is incoherent
    '''
    ri = check_bloch(initial)
    if not (0 < p <= 1):
        raise ArgumentError(f'probability must lie in (0,1], got {p}')
    if n < 8:
        raise ArgumentError(f'need at least 8 boundary points, got {n}')
    r, rz = _transverse(ri), ri[2]
    if r <= REACH_TOL:
        return np.zeros((0, 2))
    semi_x = r / np.sqrt(1 - rz*rz)
    smax = min(semi_x, max_transverse(ri, p))
    psi = np.linspace(0, 2*np.pi, n, endpoint=False)
    sx = np.clip(semi_x*np.cos(psi), -smax, smax)
    sz = np.sin(psi)
    # stay on the closed region despite rounding in cos/sin
    sz = np.sign(sz) * np.minimum(np.abs(sz), np.sqrt(np.clip(1 - (1 - rz*rz)*sx*sx/(r*r), 0, None)))
    return np.stack([sx, sz], axis=1)


def _flip_rotation(v:np.ndarray):
    """Free unitary ``V`` (phase times optional bit flip) moving ``v`` to x>=0, y=0, z>=0."""
    flip = bool(v[2] < 0)
    w = np.array([v[0], -v[1], -v[2]]) if flip else v.copy()
    alpha = float(np.arctan2(-w[1], w[0])) if np.hypot(w[0], w[1]) > 0 else 0.0
    # diag(1, e^{i alpha}) sends rho01 -> rho01 e^{-i alpha}, with rho01 = (x - i y)/2
    R = np.diag([1, np.exp(1j*alpha)])
    V = R @ PAULI_X if flip else R
    return V, {'x_flip': flip, 'z_rotation': -alpha}


def _kraus_list(mats):
    ret = []
    for m in mats:
        if np.abs(m).max() > 0:
            ret.append(SioKraus(kraus_kind(m), m))
    return tuple(ret)


def _t_bounds(p:float, rz:float):
    """Interval of t keeping both column norms of the core operators at most one."""
    t_lo = np.arccos(min(1.0, np.sqrt((1 + rz) / (2*p))))
    t_hi = np.arcsin(min(1.0, np.sqrt((1 - rz) / (2*p))))
    if t_lo > t_hi:
        # at p = 1 the interval is a single point and rounding can invert it
        t_lo = t_hi = (t_lo + t_hi) / 2
    return t_lo, t_hi


def _direct_angles(k:float, sz:float, p:float, rz:float):
    """Solve for (t, theta, phi) without an incoherent tail, or return None.

    ``k = s_x sqrt(1 - rz^2) / r_x`` must equal ``sin(2t) sin(theta)``, and ``sz`` the
    reachable z component. The smallest admissible t is returned.
    """
    t_lo, t_hi = _t_bounds(p, rz)
    half = np.arcsin(min(k, 1.0)) / 2
    left = max(t_lo, half)
    right = min(t_hi, np.pi/2 - half)
    if left > right + 1e-12:
        return None
    right = max(left, right)
    lower = lambda t: 1 - k*k / max(1e-300, 1 - abs(np.cos(2*t)))
    if lower(left) <= sz + 1e-13:
        t = left
    else:
        c_req = 1 - k*k / (1 - sz)
        t = max(left, np.pi/4, np.arccos(-min(1.0, c_req)) / 2)
        if t > right + 1e-13:
            return None
        t = min(t, right)
    sin2t = np.sin(2*t)
    theta = np.arcsin(min(1.0, k / sin2t)) if sin2t > 0 else 0.0
    c = np.cos(2*t)
    A, B = np.cos(theta), c*np.sin(theta)
    R = np.hypot(A, B)
    center = np.arctan2(B, A)
    delta = np.arccos(np.clip(sz / R, -1, 1)) if R > 0 else 0.0
    phi = None
    for cand in (center + delta, center - delta):
        if -theta - 1e-9 <= cand <= theta + 1e-9:
            phi = float(np.clip(cand, -theta, theta))
            break
    if phi is None:
        return None
    return float(t), float(theta), phi


def _core_kraus(t, theta, phi, p, rz):
    la = np.sqrt(2*p / (1 + rz)) * np.cos(t)
    lb = np.sqrt(2*p / (1 - rz)) * np.sin(t)
    a1, a2 = la*np.cos((theta - phi)/2), la*np.sin((theta - phi)/2)
    b1, b2 = lb*np.sin((theta + phi)/2), lb*np.cos((theta + phi)/2)
    K1 = np.array([[a1, 0], [0, b1]], dtype=np.complex128)
    K2 = np.array([[0, b2], [a2, 0]], dtype=np.complex128)
    return K1, K2


def _destroy_ops(weight0:float, weight1:float):
    """Destroy-kind operators adding ``weight0|0><0| + weight1|1><1|`` for any unit-trace input."""
    a0, a1 = np.sqrt(max(weight0, 0.0)), np.sqrt(max(weight1, 0.0))
    return [np.array([[a0, 0], [0, 0]], dtype=np.complex128), np.array([[0, a0], [0, 0]], dtype=np.complex128),
            np.array([[0, 0], [a1, 0]], dtype=np.complex128), np.array([[0, 0], [0, a1]], dtype=np.complex128)]


def complete_instrument(success, tol:float|None=None) -> SioInstrument:
    r'''add the diagonal failure operator that makes ``success`` a complete instrument

    Parameters:
        success (list[SioKraus|np.ndarray]): trace non-increasing strictly incoherent operators

    Returns:
        ret (SioInstrument)
    '''
    tol = numeric_tol() if tol is None else tol
    success = tuple(k if isinstance(k, SioKraus) else SioKraus(kraus_kind(k), np.asarray(k, dtype=np.complex128))
                    for k in success)
    tmp = sum((k.matrix.conj().T @ k.matrix for k in success), np.zeros((2, 2), dtype=np.complex128))
    if abs(tmp[0, 1]) > tol:
        raise PreconditionError('success operators are not strictly incoherent')
    col = tmp.diagonal().real
    if col.max() > 1 + tol:
        raise PreconditionError(f'success branch is trace increasing (column weight {col.max():.12g})')
    fill = np.sqrt(np.clip(1 - col, 0, None))
    fill[fill < 1e-15] = 0
    failure = _kraus_list([np.diag(fill).astype(np.complex128)])
    return SioInstrument(success, failure)


def apply_instrument(inst:SioInstrument, rho:np.ndarray) -> list:
    """List of ``(branch, probability, normalized state or None)`` for success and failure."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (2, 2):
        raise DimensionError(f'instruments act on qubits, got shape {rho.shape}')
    ret = []
    for name, ops in (('success', inst.success), ('failure', inst.failure)):
        out = sum((k.matrix @ rho @ k.matrix.conj().T for k in ops), np.zeros((2, 2), dtype=np.complex128))
        prob = float(np.trace(out).real)
        if prob <= 1e-15:
            ret.append((name, 0.0, None))
        else:
            ret.append((name, prob, out / prob))
    return ret


def branch_output(ops, rho:np.ndarray) -> np.ndarray:
    """Unnormalized ``sum_i K_i rho K_i^dagger``."""
    mats = [k.matrix if isinstance(k, SioKraus) else np.asarray(k) for k in ops]
    return sum((K @ rho @ K.conj().T for K in mats), np.zeros((2, 2), dtype=np.complex128))


def synthesize_instrument(initial, target, p:float):
    r'''build a strictly incoherent instrument whose success branch maps initial to ``p*target``

    Parameters:
        initial (np.ndarray): Bloch vector of the input
        target (np.ndarray): Bloch vector of the output
        p (float): success probability, must be reachable

    Returns:
        inst (SioInstrument): complete instrument
        sol (SynthesisSolution): angles, tail weight and symmetries used
    '''
    ri = check_bloch(initial)
    si = check_bloch(target)
    if not is_reachable(ri, si, p):
        r, s = _transverse(ri), _transverse(si)
        if r <= REACH_TOL:
            raise InfeasibleError('initial state is incoherent but the target is coherent')
        ellipsoid, cylinder = _split_conditions(r, ri[2], s, si[2], p)
        which = 'ellipsoid condition r^2 s_z^2 + (1-r_z^2) s^2 <= r^2' if ellipsoid > REACH_TOL else \
            'cylinder condition p^2 s^2 <= r^2 (2p-(1-|r_z|))/(1+|r_z|)'
        raise InfeasibleError(f'target not reachable with probability {p}: violates the {which}')
    p = min(float(p), 1.0)
    Vi, sym_i = _flip_rotation(ri)
    Vt, sym_t = _flip_rotation(si)
    symmetries = ({'on': 'initial', **sym_i}, {'on': 'target', **sym_t})
    r, rz = _transverse(ri), abs(ri[2])
    s, sz = _transverse(si), abs(si[2])
    undo = lambda K: Vt.conj().T @ K @ Vi

    if s <= REACH_TOL:
        mats = _destroy_ops(p*(1 + si[2])/2, p*(1 - si[2])/2)
        sol = SynthesisSolution(0.0, 0.0, 0.0, 1.0, si.copy(), symmetries)
        return complete_instrument(_kraus_list(mats)), sol

    k = min(1.0, s*np.sqrt(1 - rz*rz)/r)
    sz = min(sz, np.sqrt(max(0.0, 1 - k*k)))
    angles = _direct_angles(k, sz, p, rz)
    weight, tail_z = 1.0, -1.0
    if angles is None:
        # mix a boundary point with |1><1|: sigma = w sigma_b + (1-w)|1><1|
        t_lo, t_hi = _t_bounds(p, rz)
        k_max = np.sin(2*np.clip(np.pi/4, t_lo, t_hi))
        u = 2*(1 + sz) / ((1 + sz)**2 + k*k)
        if u*k > k_max:
            u = k_max / k
        kb = min(u*k, k_max)
        zb = min(max(u*(1 + sz) - 1, 0.0), np.sqrt(max(0.0, 1 - kb*kb)))
        angles = _direct_angles(kb, zb, p, rz)
        if angles is None:
            raise InfeasibleError('could not place a boundary point for the requested target')
        weight = 1 / u
    t, theta, phi = angles
    K1, K2 = _core_kraus(t, theta, phi, p, rz)
    mats = [np.sqrt(weight)*K1, np.sqrt(weight)*K2]
    if weight < 1:
        mats += _destroy_ops(0.0, (1 - weight)*p)
    mats = [undo(m) for m in mats]
    mats = [np.where(np.abs(m) < 1e-300, 0, m) for m in mats]
    # the bit flip on the target side sends the |1> tail to |0>
    tail_vec = np.array([0.0, 0.0, -tail_z if sym_t['x_flip'] else tail_z])
    sol = SynthesisSolution(t, theta, phi, float(1 - weight), tail_vec, symmetries)
    return complete_instrument(_kraus_list(mats)), sol


def necessary_sio_condition(rho:np.ndarray, sigma:np.ndarray, tol:float|None=None) -> bool:
    """Robustness of coherence after dephasing cannot grow under stochastic SIO."""
    from .measures import c_delta_robustness
    tol = numeric_tol() if tol is None else tol
    rho = check_density(rho)
    sigma = check_density(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f'state dimensions differ: {rho.shape} vs {sigma.shape}')
    return bool(c_delta_robustness(sigma) <= c_delta_robustness(rho) + tol)


def success_output(inst:SioInstrument, initial) -> np.ndarray:
    rho = bloch_to_density(initial) if np.shape(initial) == (3,) else np.asarray(initial)
    return branch_output(inst.success, rho)


__all__ = ['SioKraus', 'SioInstrument', 'SynthesisSolution', 'InfeasibleError', 'is_reachable',
           'max_conversion_probability', 'max_transverse', 'reachable_boundary', 'synthesize_instrument',
           'complete_instrument', 'apply_instrument', 'branch_output', 'is_incoherent_kraus',
           'is_strictly_incoherent_kraus', 'kraus_kind', 'necessary_sio_condition', 'coherence_rank',
           'success_output']
