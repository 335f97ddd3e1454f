"""Coherence quantifiers and the measure-ratio bound on conversion probability."""
import numpy as np

from .core import (CoherenceError, DimensionError, InvalidStateError, ArgumentError, numeric_tol,
                   check_density, dephase, von_neumann_entropy, binary_entropy, hermitian_eigensystem)

SUPPORT_THRESHOLD = 1e-12


class UndefinedBoundError(CoherenceError):
    kind = 'undefined-bound'


def c_l1(rho:np.ndarray) -> float:
    rho = np.asarray(rho)
    return float(np.abs(rho).sum() - np.abs(np.diag(rho)).sum())


def c_distillable(rho:np.ndarray) -> float:
    """Relative entropy of coherence ``S(dephase(rho)) - S(rho)`` in bits."""
    ret = von_neumann_entropy(dephase(rho)) - von_neumann_entropy(rho)
    return max(0.0, ret)


def c_cost_qubit(rho:np.ndarray) -> float:
    rho = np.asarray(rho)
    if rho.shape != (2, 2):
        raise DimensionError(f'coherence cost is only implemented for qubits, got shape {rho.shape}')
    x = min(1.0, 4 * abs(rho[0, 1])**2)
    return binary_entropy((1 + np.sqrt(1 - x)) / 2)


def c_delta_robustness(rho:np.ndarray) -> float:
    r'''smallest t >= 0 with rho <= (1+t) dephase(rho)

    Solved as an extreme eigenvalue of ``D^{-1/2} rho D^{-1/2}`` on the support of the
    diagonal ``D``; rows outside the support must vanish by positivity.

    Parameters:
        rho (np.ndarray): shape=(d,d) density matrix

    Returns:
        ret (float): non-negative robustness
    '''
    rho = np.asarray(rho, dtype=np.complex128)
    diag = np.diag(rho).real
    keep = diag > SUPPORT_THRESHOLD
    drop = ~keep
    if drop.any():
        tol = numeric_tol()
        if np.abs(rho[drop]).max() > tol or np.abs(rho[:, drop]).max() > tol:
            raise InvalidStateError('state has weight outside the support of its diagonal')
    if keep.sum() <= 1:
        return 0.0
    sub = rho[np.ix_(keep, keep)]
    inv_sqrt = 1 / np.sqrt(diag[keep])
    M = sub * inv_sqrt[:, None] * inv_sqrt[None, :]
    lam_max = hermitian_eigensystem((M + M.conj().T) / 2)[0][-1]
    return float(max(0.0, lam_max - 1))


def c_delta_robustness_qubit(bloch) -> float:
    """Closed form ``r / sqrt(1 - rz^2)`` for a qubit Bloch vector."""
    v = np.asarray(bloch, dtype=np.float64)
    r = np.hypot(v[0], v[1])
    if r == 0:
        return 0.0
    return float(r / np.sqrt(1 - v[2]**2))


MEASURES = {
    'l1': c_l1,
    'distillable': c_distillable,
    'cost': c_cost_qubit,
    'delta_robustness': c_delta_robustness,
}


def all_measures(rho:np.ndarray) -> dict:
    rho = check_density(rho)
    ret = {'l1': c_l1(rho), 'distillable': c_distillable(rho), 'delta_robustness': c_delta_robustness(rho)}
    if rho.shape == (2, 2):
        ret['cost'] = c_cost_qubit(rho)
    return ret


def probability_upper_bound(rho:np.ndarray, sigma:np.ndarray, measure:str='l1') -> float:
    if measure not in MEASURES:
        raise ArgumentError(f'unknown measure {measure!r}, choose from {sorted(MEASURES)}')
    fn = MEASURES[measure]
    c_sigma = fn(sigma)
    if c_sigma <= numeric_tol():
        raise UndefinedBoundError('target is incoherent, the conversion is free and the ratio is undefined')
    return max(0.0, fn(rho) / c_sigma)
