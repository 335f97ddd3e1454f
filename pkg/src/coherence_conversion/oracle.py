"""Brute-force certification of reachability and optimal probabilities.

Nothing here uses the closed-form conditions. The oracle enumerates strictly
incoherent instruments on a grid (plus random draws), applies them to the input
by plain matrix products, and keeps whatever lands near the target.

Grid instruments have a diagonal and an antidiagonal core operator. Their
column norms are parametrized by an angle ``t`` and the split inside each
column by ``(theta, phi)``. Every core is then diluted: it is scaled down, and
incoherent mass is added with destroy-kind operators. For a fixed core and a
fixed mixing weight the normalized output is fixed. The success probability can
be raised until either the core scale or the overall trace reaches one, so that
last step is solved exactly.
"""
import dataclasses

import numpy as np

from .core import (ArgumentError, PAULI_X, check_bloch, bloch_to_density, density_to_bloch, trace_distance)
from .conversion import (SioInstrument, complete_instrument, kraus_kind, SioKraus, branch_output,
                         max_conversion_probability)


@dataclasses.dataclass(frozen=True)
class OracleConfig:
    grid_resolution: int = 64
    random_samples: int = 2000
    seed: int = 0
    target_tolerance: float = 0.001

    def __post_init__(self):
        if self.grid_resolution < 8:
            raise ArgumentError(f'grid resolution must be at least 8, got {self.grid_resolution}')
        if not (0 < self.target_tolerance <= 0.1):
            raise ArgumentError(f'target tolerance must lie in (0, 0.1], got {self.target_tolerance}')


def sample_sio_instrument(rng:np.random.Generator, include_destroyers:bool=True) -> SioInstrument:
    r'''random four-operator strictly incoherent instrument

    amplitudes ``(a1,a2,a3)`` and ``(b1,b2,b3)`` are drawn uniformly from the
    non-negative part of the unit ball by rejection.
    '''
    def ball():
        while True:
            v = rng.uniform(0, 1, size=3)
            if not include_destroyers:
                v[2] = 0
            if v @ v <= 1:
                return v
    a = ball()
    b = ball()
    mats = [np.array([[a[0], 0], [0, b[0]]]), np.array([[0, b[1]], [a[1], 0]]),
            np.array([[a[2], 0], [0, 0]]), np.array([[0, b[2]], [0, 0]])]
    ops = [SioKraus(kraus_kind(m), m.astype(np.complex128)) for m in mats if np.abs(m).max() > 0]
    return complete_instrument(ops)


def _free_frame(v:np.ndarray):
    """Diagonal phase rotating the Bloch vector into the x-z plane with x >= 0."""
    alpha = np.arctan2(v[1], v[0]) if np.hypot(v[0], v[1]) > 0 else 0.0
    return np.diag([1, np.exp(1j*alpha)])


def _cores(rho:np.ndarray, t, theta, u):
    """Core operators at flat parameter arrays and their unnormalized outputs on ``rho``."""
    rz = float(np.clip((rho[0, 0] - rho[1, 1]).real, -1, 1))
    t, theta, u = (np.asarray(x, dtype=np.float64).reshape(-1) for x in (t, theta, u))
    phi = theta*u
    la = np.cos(t) / np.sqrt(1 + rz + 1e-300)
    lb = np.sin(t) / np.sqrt(max(1 - rz, 1e-300))
    # only the column ratio matters, the larger column is pushed to norm one
    scale = 1 / np.maximum(np.maximum(la, lb), 1e-300)
    la, lb = la*scale, lb*scale
    al, be = (theta - phi)/2, (theta + phi)/2
    n = la.size
    K1 = np.zeros((n, 2, 2), dtype=np.complex128)
    K2 = np.zeros((n, 2, 2), dtype=np.complex128)
    K1[:, 0, 0] = la*np.cos(al)
    K1[:, 1, 1] = lb*np.sin(be)
    K2[:, 0, 1] = lb*np.cos(be)
    K2[:, 1, 0] = la*np.sin(al)
    out = np.einsum('nij,jk,nlk->nil', K1, rho, K1.conj()) + np.einsum('nij,jk,nlk->nil', K2, rho, K2.conj())
    return K1, K2, out


def _grid_params(res:int):
    t = np.linspace(0, np.pi/2, res)
    theta = np.linspace(0, np.pi/2, res)
    u = np.linspace(-1, 1, res)
    return [x.reshape(-1) for x in np.meshgrid(t, theta, u, indexing='ij')]


def _grid_cores(rho:np.ndarray, res:int):
    return _cores(rho, *_grid_params(res))


def _dilute(cores_out:np.ndarray, target_xz, eps:float, with_gap:bool=False):
    """Best dilution of every core toward ``target_xz``; returns (p, w, zeta) arrays.

    With ``with_gap`` also returns how far each core misses the matching tolerance
    (zero for feasible cores), used to steer the local refinement.
    """
    tr = np.trace(cores_out, axis1=1, axis2=2).real
    X = 2*cores_out[:, 0, 1].real
    Z = (cores_out[:, 0, 0] - cores_out[:, 1, 1]).real
    sx, sz = target_xz
    ex = ez = eps / np.sqrt(2)
    ok = tr > 1e-14
    xh = np.where(ok, X / np.where(ok, tr, 1), 0)
    zh = np.where(ok, Z / np.where(ok, tr, 1), 0)
    if sx <= ex:
        w = np.zeros_like(tr)
        gap_x = np.zeros_like(tr)
    else:
        w = np.clip((sx - ex) / np.where(xh > 0, xh, np.inf), 0, 1)
        gap_x = np.maximum(0, sx - ex - xh)
    gap_z = np.maximum(0, np.abs(sz - w*zh) - (1 - w) - ez)
    ok &= (gap_x <= 0) & (gap_z <= 0)
    p = np.where(w > 0, np.minimum(1, tr / np.where(w > 0, w, 1)), 1.0)
    p = np.where(ok, p, 0.0)
    zeta = np.clip((sz - w*zh) / np.where(w < 1, 1 - w, 1), -1, 1)
    if with_gap:
        return p, w, zeta, np.where(tr > 1e-14, gap_x + gap_z, np.inf)
    return p, w, zeta


def _diluted_instrument(K1, K2, rho, p, w, zeta) -> SioInstrument:
    """Rebuild the diluted instrument so the candidate can be re-applied honestly."""
    tr = np.trace(K1 @ rho @ K1.conj().T + K2 @ rho @ K2.conj().T).real
    mu = w*p/tr if w > 0 else 0.0
    # each column keeps the budget its scaled core leaves free, a common fraction of it is destroyed
    col0 = 1 - mu*(abs(K1[0, 0])**2 + abs(K2[1, 0])**2)
    col1 = 1 - mu*(abs(K1[1, 1])**2 + abs(K2[0, 1])**2)
    free = col0*rho[0, 0].real + col1*rho[1, 1].real
    frac = min(1.0, p*(1 - w) / free) if free > 0 else 0.0
    da, db = max(0.0, frac*col0), max(0.0, frac*col1)
    up, down = (1 + zeta)/2, (1 - zeta)/2
    mats = [np.sqrt(mu)*K1, np.sqrt(mu)*K2,
            np.array([[np.sqrt(da*up), 0], [0, 0]]), np.array([[0, 0], [np.sqrt(da*down), 0]]),
            np.array([[0, np.sqrt(db*up)], [0, 0]]), np.array([[0, 0], [0, np.sqrt(db*down)]])]
    ops = [SioKraus(kraus_kind(m), np.asarray(m, dtype=np.complex128)) for m in mats if np.abs(m).max() > 0]
    return complete_instrument(ops, tol=1e-9)


class _Search:
    """Grid cores for one input under each free pre-processing choice (identity or bit flip).

    The coarse grid is followed by a few rounds of local zooming around the
    best cells, since the optimal probability can be steep in the core angles.
    """
    ZOOM_ROUNDS = 4
    ZOOM_POINTS = 7
    ZOOM_SEEDS = 6

    def __init__(self, initial, cfg:OracleConfig):
        ri = check_bloch(initial)
        rho = bloch_to_density(ri)
        V = _free_frame(ri)
        self.cfg = cfg
        self.params = np.stack(_grid_params(cfg.grid_resolution), axis=1)
        self.step = np.array([np.pi/2, np.pi/2, 2]) / (cfg.grid_resolution - 1)
        self.frames = []
        for pre in (np.eye(2), PAULI_X):
            U = pre @ V.conj().T
            rho_f = U @ rho @ U.conj().T
            K1, K2, out = _cores(rho_f, *self.params.T)
            self.frames.append((U, rho_f, K1, K2, out))

    def _zoom(self, rho_f, center, target_xz, eps):
        lo = np.array([0, 0, -1.0])
        hi = np.array([np.pi/2, np.pi/2, 1.0])
        best = (0.0, None)
        span = self.step.copy()
        offs = np.linspace(-1, 1, self.ZOOM_POINTS)
        for _ in range(self.ZOOM_ROUNDS):
            axes = [np.clip(center[j] + span[j]*offs, lo[j], hi[j]) for j in range(3)]
            pts = np.stack([x.reshape(-1) for x in np.meshgrid(*axes, indexing='ij')], axis=1)
            K1, K2, out = _cores(rho_f, *pts.T)
            p, w, zeta, gap = _dilute(out, target_xz, eps, with_gap=True)
            # move toward the best feasible cell, or the least infeasible one while none is feasible
            i = int(np.argmax(p)) if p.max() > 0 else int(np.argmin(gap))
            if p[i] > best[0]:
                best = (float(p[i]), (K1[i], K2[i], float(w[i]), float(zeta[i])))
            center = pts[i]
            span = span / 3
        return best

    def best(self, target):
        si = check_bloch(target)
        s = float(np.hypot(si[0], si[1]))
        eps = 2*self.cfg.target_tolerance
        ret = (0.0, None)
        # post-processing by the bit flip mirrors the target's z component
        for U, rho_f, K1, K2, out in self.frames:
            for flip in (False, True):
                sz = -si[2] if flip else si[2]
                p, w, zeta, gap = _dilute(out, (s, sz), eps, with_gap=True)
                if p.max() > 0:
                    order = np.argsort(-p)[:self.ZOOM_SEEDS]
                else:
                    order = np.argsort(gap)[:self.ZOOM_SEEDS]
                for i in order:
                    if p[i] > ret[0]:
                        ret = (float(p[i]), (U, rho_f, K1[i], K2[i], float(w[i]), float(zeta[i]), flip))
                    q, info = self._zoom(rho_f, self.params[i], (s, sz), eps)
                    if q > ret[0]:
                        ret = (q, (U, rho_f) + info + (flip,))
        return ret


def oracle_max_probability(initial, target, cfg:OracleConfig=OracleConfig(), return_witness:bool=False):
    r'''largest success probability found by brute force for initial -> target

    Parameters:
        initial (np.ndarray): Bloch vector
        target (np.ndarray): Bloch vector
        cfg (OracleConfig): grid resolution and matching tolerance (trace distance)
        return_witness (bool): also return the realized (output Bloch vector, probability)

    Returns:
        ret (float): 0 when no grid instrument lands within tolerance
    '''
    return _search_one(_Search(initial, cfg), initial, target, return_witness)


def _search_one(search:_Search, initial, target, return_witness:bool=False):
    p, info = search.best(target)
    witness = None
    if info is not None:
        U, rho_f, K1, K2, w, zeta, flip = info
        inst = _diluted_instrument(K1, K2, rho_f, p, w, zeta)
        out = branch_output(inst.success, rho_f)
        p_hat = float(np.trace(out).real)
        b = density_to_bloch(out / p_hat)
        if flip:
            b = b * np.array([1, -1, -1])
        # rotate the realized output into the target's azimuth (a free diagonal phase)
        si = check_bloch(target)
        ang = np.arctan2(si[1], si[0]) if np.hypot(si[0], si[1]) > 0 else 0.0
        b = np.array([b[0]*np.cos(ang) - b[1]*np.sin(ang), b[0]*np.sin(ang) + b[1]*np.cos(ang), b[2]])
        dist = trace_distance(bloch_to_density(b), bloch_to_density(si))
        if dist > search.cfg.target_tolerance + 1e-9:
            p_hat, b = 0.0, None
        p = p_hat
        witness = (b, p_hat)
    if return_witness:
        return p, witness
    return p


def oracle_grid(initial, targets, cfg:OracleConfig=OracleConfig()) -> np.ndarray:
    """Oracle probabilities for many targets sharing one input (cores built once)."""
    search = _Search(initial, cfg)
    return np.array([_search_one(search, initial, t) for t in targets])


def oracle_reachable_set(initial, p:float, cfg:OracleConfig=OracleConfig()) -> np.ndarray:
    r'''point cloud of x-z outputs reachable with probability at least ``p``

    Collects diluted grid cores (mixed with |0> or |1> as far as the probability
    allows) and randomly drawn four-operator instruments, both with and without
    a bit flip before the instrument, then mirrors the cloud through the free
    bit flip and z rotation applied afterwards.

    Returns:
        ret (np.ndarray): shape=(N,2) columns ``(s_x, s_z)``
    '''
    if not (0 < p <= 1):
        raise ArgumentError(f'probability must lie in (0,1], got {p}')
    ri = check_bloch(initial)
    rho = bloch_to_density(ri)
    V = _free_frame(ri)
    points = [np.array([[0.0, 1.0], [0.0, -1.0]])]
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    for pre in (np.eye(2), PAULI_X):
        U = pre @ V.conj().T
        rho_f = U @ rho @ U.conj().T
        _, _, out = _grid_cores(rho_f, cfg.grid_resolution)
        tr = np.trace(out, axis1=1, axis2=2).real
        keep = tr > 1e-12
        tr, out = tr[keep], out[keep]
        xh = 2*out[:, 0, 1].real / tr
        zh = (out[:, 0, 0] - out[:, 1, 1]).real / tr
        # a core of trace tr mixed with weight w still succeeds with probability min(1, tr/w)
        wmax = np.minimum(1, tr / p)
        for frac in (1.0, 0.75, 0.5, 0.25):
            w = frac*wmax
            for zeta in (-1.0, 1.0):
                points.append(np.stack([w*xh, w*zh + (1 - w)*zeta], axis=1))
        for _ in range(cfg.random_samples // 2):
            o = branch_output(sample_sio_instrument(rng).success, rho_f)
            q = float(np.trace(o).real)
            # the success branch can always be scaled down
            if q >= p:
                b = density_to_bloch(o / q)
                points.append(np.array([[b[0], b[2]]]))
    cloud = np.concatenate(points, axis=0)
    mirrored = [cloud*np.array(m) for m in ([1, 1], [-1, 1], [1, -1], [-1, -1])]
    return np.concatenate(mirrored, axis=0)


VERIFY_TOL = 0.02
GRID_INITIALS = ((1/3, 0.0, 5/6), (np.sqrt(11)/6, 0.0, 5/6), (0.5, 0.0, 1/3))


def region_gap(initial, target, n:int=4096) -> float:
    """Bloch distance from ``target`` to the set of outputs reachable with some positive probability."""
    ri = check_bloch(initial)
    si = check_bloch(target)
    r, rz = float(np.hypot(ri[0], ri[1])), ri[2]
    s, sz = float(np.hypot(si[0], si[1])), si[2]
    if r == 0:
        return s
    if r*r*sz*sz + (1 - rz*rz)*s*s <= r*r:
        return 0.0
    a = r / np.sqrt(1 - rz*rz)
    psi = np.linspace(0, 2*np.pi, n)
    return float(np.min(np.hypot(a*np.cos(psi) - s, np.sin(psi) - sz)))


def verify_queries(queries, cfg:OracleConfig=OracleConfig(), formula=None) -> list:
    r'''compare closed-form probabilities with the brute-force oracle

    A query passes when both are positive and agree within ``VERIFY_TOL``, or
    when the formula gives zero and the oracle finds nothing. A target closer to
    the reachable region than the matching tolerance may legitimately be hit,
    so it also passes.

    Parameters:
        queries (list): ``(initial, target)`` Bloch vector pairs
        formula (callable): closed form ``(initial, target) -> p``

    Returns:
        ret (list[dict]): ``{query, formula_p, oracle_p, delta, pass}`` per query
    '''
    formula = max_conversion_probability if formula is None else formula
    ret = []
    searches = {}
    for initial, target in queries:
        key = tuple(np.round(np.asarray(initial, dtype=np.float64), 15))
        if key not in searches:
            searches[key] = _Search(initial, cfg)
        fp = float(formula(initial, target))
        op = float(_search_one(searches[key], initial, target))
        delta = op - fp
        if fp > 0:
            ok = abs(delta) <= VERIFY_TOL
        else:
            ok = op == 0 or region_gap(initial, target) <= 2*cfg.target_tolerance
        ret.append({'query': {'initial': [float(x) for x in initial], 'target': [float(x) for x in target]},
                    'formula_p': fp, 'oracle_p': op, 'delta': delta, 'pass': bool(ok)})
    return ret


def grid_queries(n:int=15) -> list:
    """In-ball x-z targets on an ``n`` by ``n`` grid, for each reference initial state."""
    g = np.linspace(-1, 1, n)
    targets = [np.array([x, 0.0, z]) for x in g for z in g if x*x + z*z <= 1 + 1e-12]
    return [(np.array(ri), t) for ri in GRID_INITIALS for t in targets]


def random_queries(n:int, seed=None) -> list:
    """Random x-z initial/target pairs drawn uniformly from the unit disk."""
    rng = np.random.default_rng(seed)
    def disk():
        while True:
            v = rng.uniform(-1, 1, size=2)
            if v @ v <= 1:
                return np.array([abs(v[0]), 0.0, v[1]])
    ret = []
    for _ in range(n):
        ri = disk()
        t = disk()
        t[0] *= rng.choice([-1, 1])
        ret.append((ri, t))
    return ret
