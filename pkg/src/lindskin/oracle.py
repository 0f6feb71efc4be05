"""Exact many-body reference: the full 4^N Liouvillian and covariance dynamics.

Fock states are bit strings with site 1 as the least significant bit;
``c_i`` carries the parity string of all lower sites. Density matrices are
vectorised row-major, ``rho[a, b] -> a * 2^N + b``, and the generator follows
``i d rho/dt = L rho`` so decaying modes have negative imaginary parts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg as sla

from .errors import CapacityError, IntegrationError, SteadyStateDegeneracyError
from .model import RealSpaceModel, build_h_eff, dissipation
from .spectral import eig, eigvals

MAX_SITES = 5
NULL_TOL = 1e-8
EIG_CONDITION_LIMIT = 1e10


@lru_cache(maxsize=None)
def _annihilators(n: int) -> tuple[np.ndarray, ...]:
    dim = 1 << n
    states = np.arange(dim)
    popcount = np.array([bin(s).count("1") for s in range(dim)])
    ops = []
    for i in range(n):
        c = np.zeros((dim, dim))
        src = states[(states >> i) & 1 == 1]
        sign = (-1.0) ** popcount[src & ((1 << i) - 1)]
        c[src ^ (1 << i), src] = sign
        c.setflags(write=False)
        ops.append(c)
    return tuple(ops)


def annihilators(n: int) -> tuple[np.ndarray, ...]:
    """Dense ``c_1 .. c_N`` on the 2^N Fock space."""
    return _annihilators(n)


def fock_parity(n: int) -> np.ndarray:
    return np.array([bin(s).count("1") % 2 for s in range(1 << n)])


def fock_state(occupied, n: int) -> np.ndarray:
    """Pure-state density matrix with the listed sites (1-based) filled."""
    idx = sum(1 << (i - 1) for i in occupied)
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[idx, idx] = 1
    return rho


@dataclass(frozen=True, eq=False)
class ExactLiouvillian:
    n_sites: int
    matrix: np.ndarray
    even_mask: np.ndarray
    h_post: np.ndarray = field(repr=False)
    jumps: tuple = field(repr=False, default=())

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def even_block(self) -> np.ndarray:
        return self.matrix[np.ix_(self.even_mask, self.even_mask)]


@dataclass(frozen=True, eq=False)
class SteadyState:
    rho: np.ndarray
    occupations: np.ndarray


@dataclass(frozen=True, eq=False)
class CovarianceTrajectory:
    times: np.ndarray
    covariances: np.ndarray
    occupations: np.ndarray
    rhos: np.ndarray | None = None


def many_body_operators(model: RealSpaceModel):
    """Many-body Hermitian Hamiltonian and jump operators of ``model``."""
    n = model.n_sites
    if n > MAX_SITES:
        raise CapacityError(f"exact Liouvillian limited to {MAX_SITES} sites, got {n}")
    cs = annihilators(n)
    cds = [c.T for c in cs]
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        for j in range(n):
            if model.hopping[i, j] != 0:
                h += model.hopping[i, j] * (cds[i] @ cs[j])
    jumps = [sum(row[i] * cs[i] for i in range(n)) for row in model.loss_coeffs]
    jumps += [sum(row[i] * cds[i] for i in range(n)) for row in model.gain_coeffs]
    return h, [np.asarray(j, dtype=complex) for j in jumps]


def build_liouvillian(model: RealSpaceModel) -> ExactLiouvillian:
    h, jumps = many_body_operators(model)
    dim = h.shape[0]
    h_post = h - 0.5j * sum((j.conj().T @ j for j in jumps), np.zeros_like(h))
    eye = np.eye(dim)
    lv = np.kron(h_post, eye) - np.kron(eye, h_post.conj())
    for j in jumps:
        lv += 1j * np.kron(j, j.conj())
    par = fock_parity(model.n_sites)
    even = (par[:, None] == par[None, :]).reshape(-1)
    return ExactLiouvillian(model.n_sites, lv, even, h_post, tuple(jumps))


def even_sector_spectrum(liou: ExactLiouvillian) -> np.ndarray:
    return eigvals(liou.even_block())


def even_subset_sums(rapidities) -> np.ndarray:
    """All sums over even-sized subsets of the rapidities (2^(2N-1) values)."""
    lam = np.asarray(rapidities, dtype=complex)
    sums = np.zeros(1, dtype=complex)
    parity = np.zeros(1, dtype=int)
    for x in lam:
        sums = np.concatenate([sums, sums + x])
        parity = np.concatenate([parity, parity + 1])
    return sums[parity % 2 == 0]


def number_operators(n: int) -> list[np.ndarray]:
    return [c.T @ c for c in annihilators(n)]


def covariance_of(rho: np.ndarray, n: int) -> np.ndarray:
    """``C_ij = tr(rho c_i^dag c_j)``."""
    cs = annihilators(n)
    cov = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            cov[i, j] = np.trace(rho @ cs[i].T @ cs[j])
    return cov


def steady_state(liou: ExactLiouvillian) -> SteadyState:
    block = liou.even_block()
    w = np.abs(eigvals(block))
    mult = int(np.sum(w <= NULL_TOL))
    if mult != 1:
        raise SteadyStateDegeneracyError(mult)
    _, _, vh = np.linalg.svd(block)
    vec = np.zeros(liou.matrix.shape[0], dtype=complex)
    vec[liou.even_mask] = vh[-1].conj()
    rho = vec.reshape(liou.dim, liou.dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho)
    occ = np.array([np.trace(rho @ nop).real for nop in number_operators(liou.n_sites)])
    return SteadyState(rho, occ)


def _check_times(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or not np.all(np.isfinite(t)):
        raise ValueError("time grid must be a finite 1-D array")
    if np.any(np.diff(t) < 0) or (t.size and t[0] < 0):
        raise ValueError("time grid must be ascending and non-negative")
    return t


def evolve_exact(liou: ExactLiouvillian, rho0, t_grid) -> CovarianceTrajectory:
    """``rho(t) = exp(-i L t) rho0`` through the eigenbasis of L.

    Falls back to dense matrix exponentials when the eigenvector matrix is
    badly conditioned or does not reproduce L.
    """
    t = _check_times(t_grid)
    n, dim = liou.n_sites, liou.dim
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ValueError(f"rho0 must be {dim}x{dim}")
    v0 = rho0.reshape(-1)
    lv = liou.matrix
    w, r = eig(lv)
    use_eig = np.linalg.cond(r) <= EIG_CONDITION_LIMIT
    if use_eig:
        rinv = np.linalg.inv(r)
        resid = np.linalg.norm(r @ (w[:, None] * rinv) - lv) / max(np.linalg.norm(lv), 1.0)
        use_eig = resid <= 1e-10
    rhos = np.empty((t.size, dim, dim), dtype=complex)
    if use_eig:
        coef = rinv @ v0
        for n_t, tt in enumerate(t):
            rhos[n_t] = (r @ (np.exp(-1j * w * tt) * coef)).reshape(dim, dim)
    else:
        for n_t, tt in enumerate(t):
            rhos[n_t] = (sla.expm(-1j * lv * tt) @ v0).reshape(dim, dim)
    covs = np.array([covariance_of(rho, n) for rho in rhos])
    occ = np.einsum("tii->ti", covs).real
    return CovarianceTrajectory(t, covs, occ, rhos)


# --- covariance equation of motion ---------------------------------------------

def covariance_generator(model: RealSpaceModel) -> tuple[np.ndarray, np.ndarray]:
    """Drift ``K`` and source ``S`` of ``dC/dt = K C + C K^dag + S``.

    ``K = i conj(H_eff)`` and ``S = m_gain``.
    """
    heff = build_h_eff(model).matrix
    return 1j * heff.conj(), dissipation(model).m_gain


def steady_covariance(model: RealSpaceModel) -> np.ndarray:
    k, s = covariance_generator(model)
    kap = eigvals(k)
    if np.min(np.abs(kap[:, None] + kap.conj()[None, :])) < 1e-10:
        raise SteadyStateDegeneracyError(0)
    return sla.solve_continuous_lyapunov(k, -s)


def _van_loan_step(k, s, dt):
    n = k.shape[0]
    big = np.block([[k, s], [np.zeros((n, n)), -k.conj().T]]) * dt
    f = sla.expm(big)
    e = f[:n, :n]
    return e, f[:n, n:] @ e.conj().T


def evolve_covariance(model: RealSpaceModel, c0, t_grid) -> CovarianceTrajectory:
    """Two-point function ``C(t)`` from ``C(0) = c0``, exactly for quadratic dynamics."""
    t = _check_times(t_grid)
    c0 = np.asarray(c0, dtype=complex)
    n = model.n_sites
    if c0.shape != (n, n):
        raise ValueError(f"C0 must be {n}x{n}")
    if np.max(np.abs(c0 - c0.conj().T)) > 1e-10:
        raise ValueError("C0 must be Hermitian")
    ev0 = np.linalg.eigvalsh(c0)
    if ev0.min() < -1e-10 or ev0.max() > 1 + 1e-10:
        raise ValueError("C0 spectrum must lie in [0, 1]")
    k, s = covariance_generator(model)
    try:
        c_ss = steady_covariance(model)
    except SteadyStateDegeneracyError:
        c_ss = None
    covs = np.empty((t.size, n, n), dtype=complex)
    for n_t, tt in enumerate(t):
        if c_ss is not None:
            e = sla.expm(k * tt)
            c = e @ (c0 - c_ss) @ e.conj().T + c_ss
        else:
            steps = max(1, int(np.ceil(np.linalg.norm(k, 2) * tt / 0.5)))
            e, q = _van_loan_step(k, s, tt / steps) if tt > 0 else (np.eye(n), np.zeros((n, n)))
            c = c0.copy()
            for _ in range(steps if tt > 0 else 0):
                c = e @ c @ e.conj().T + q
        c = 0.5 * (c + c.conj().T)
        ev = np.linalg.eigvalsh(c)
        if not np.all(np.isfinite(ev)) or ev.max() > 1 + 1e-6 or ev.min() < -1e-6:
            raise IntegrationError(f"covariance left the physical range at t={tt}")
        covs[n_t] = c
    occ = np.einsum("tii->ti", covs).real
    return CovarianceTrajectory(t, covs, occ)


def relaxation_time(liou: ExactLiouvillian) -> float:
    """Inverse of the smallest nonzero decay rate in the physical sector."""
    rates = -even_sector_spectrum(liou).imag
    rates = rates[rates > NULL_TOL]
    return float(1 / rates.min())
