"""Bounds on asymptotic conversion rates and the qubit irreversibility region."""
import dataclasses

import numpy as np

from .core import ArgumentError, check_bloch, bloch_to_density, density_to_bloch, binary_entropy, check_density
from .conversion import max_conversion_probability
from .measures import c_distillable, c_cost_qubit, UndefinedBoundError

PINCH_TOL = 1e-9
CURVE_SAMPLES = 1024
EXAMPLE_RHO = np.array([[2/3, 1/4], [1/4, 1/3]], dtype=np.complex128)


@dataclasses.dataclass(frozen=True)
class RateBounds:
    lower: float
    upper: float
    lower_probability: float
    lower_ratio: float

    @property
    def pinched(self) -> bool:
        return abs(self.upper - self.lower) <= PINCH_TOL

    def to_json(self) -> dict:
        return {'lower': self.lower, 'upper': self.upper, 'lower_probability': self.lower_probability,
                'lower_ratio': self.lower_ratio, 'pinched': self.pinched}


def mixed_plus_minus(q:float) -> np.ndarray:
    """``q|+><+| + (1-q)|-><-|``, Bloch vector ``(2q-1, 0, 0)``."""
    if not (0 <= q <= 1):
        raise ArgumentError(f'mixing weight must lie in [0,1], got {q}')
    return bloch_to_density([2*q - 1, 0, 0])


def rate_bounds(rho:np.ndarray, sigma:np.ndarray, tol:float=1e-12) -> RateBounds:
    r'''lower and upper bounds on the asymptotic rate of rho -> sigma

    lower is the larger of the single-copy optimal probability and ``C_d(rho)/C_c(sigma)``;
    upper is the smaller of ``C_d(rho)/C_d(sigma)`` and ``C_c(rho)/C_c(sigma)``.

    Parameters:
        rho (np.ndarray): qubit density matrix
        sigma (np.ndarray): coherent qubit density matrix

    Returns:
        ret (RateBounds)
    '''
    rho = check_density(rho)
    sigma = check_density(sigma)
    cd_sigma = c_distillable(sigma)
    cc_sigma = c_cost_qubit(sigma)
    if cd_sigma <= tol or cc_sigma <= tol:
        raise UndefinedBoundError('target is incoherent, rate is unbounded')
    cd_rho = c_distillable(rho)
    cc_rho = c_cost_qubit(rho)
    prob = max_conversion_probability(density_to_bloch(rho), density_to_bloch(sigma))
    ratio = cd_rho / cc_sigma
    return RateBounds(max(prob, ratio), min(cd_rho/cd_sigma, cc_rho/cc_sigma), prob, ratio)


def unit_rate_certificate(initial, target, tol:float=1e-10) -> bool:
    ri = check_bloch(initial)
    si = check_bloch(target)
    r, s = np.hypot(ri[0], ri[1]), np.hypot(si[0], si[1])
    return bool(si[2]**2 <= ri[2]**2 + tol and abs(s - r) <= tol)


def scan_bounds(qs, rho:np.ndarray=EXAMPLE_RHO) -> np.ndarray:
    """Rows ``(q, lower_P, lower_ratio, upper)`` for targets ``mixed_plus_minus(q)``.

    q = 1/2 gives an incoherent target and is skipped.
    """
    ret = []
    for q in qs:
        if abs(q - 0.5) <= 1e-12:
            continue
        b = rate_bounds(rho, mixed_plus_minus(q))
        ret.append((q, b.lower_probability, b.lower_ratio, b.upper))
    return np.array(ret)


def irreversibility_curve(n:int=CURVE_SAMPLES) -> np.ndarray:
    r'''lower boundary of the (coherence cost, distillable coherence) region

    Samples the family ``mixed_plus_minus(q)`` for q in [1/2, 1].

    Returns:
        ret (np.ndarray): shape=(n,3) columns ``(q, C_c, C_d)``
    '''
    if n < 2:
        raise ArgumentError(f'need at least 2 samples, got {n}')
    ret = []
    for q in np.linspace(0.5, 1, n):
        sigma = mixed_plus_minus(q)
        ret.append((q, c_cost_qubit(sigma), c_distillable(sigma)))
    return np.array(ret)


def lower_curve_at(rho:np.ndarray) -> float:
    """Distillable coherence of the family member with the same coherence cost as ``rho``.

    Coherence cost depends on ``|rho_01|`` only, and the family member with
    ``|sigma_01| = |rho_01|`` has ``q = 1/2 + |rho_01|``, so no interpolation is needed.
    """
    a = min(0.5, abs(np.asarray(rho)[0, 1]))
    return 1 - binary_entropy(0.5 + a)


def region_membership(rho:np.ndarray, tol:float=1e-9) -> bool:
    rho = check_density(rho)
    cd = c_distillable(rho)
    return bool(lower_curve_at(rho) - tol <= cd <= c_cost_qubit(rho) + tol)
