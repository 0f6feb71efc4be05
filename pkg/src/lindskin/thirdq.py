"""Third quantization of quadratic loss/gain Lindbladians.

Majoranas follow ``c_i = (w_{i,1} - i w_{i,2}) / 2``, with the pair of site
``i`` stored at rows ``2i, 2i+1``. The Majorana Hamiltonian ``h_maj`` is the
antisymmetric part of the quadratic form, which is purely imaginary (it is
Hermitian and antisymmetric); ``h_maj.imag`` is the real antisymmetric
representation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import linalg as sla

from .errors import CapacityError, ConditioningError, ResonanceError
from .model import BlochModel, RealSpaceModel, fourier, stencil_blocks
from .spectral import eig, eigvals, lexsort_complex

MAX_SITES = 512
RESONANCE_TOL = 1e-10
CONDITION_LIMIT = 1e8
# 4N^2 unknowns; beyond this the dense vectorized solve is impractical
VECTORIZED_MAX_SITES = 32

# c = u . (w1, w2), c^dag = conj(u) . (w1, w2)
_U = np.array([0.5, -0.5j])
_UBAR = _U.conj()


@dataclass(frozen=True, eq=False)
class MajoranaForm:
    h_maj: np.ndarray
    jump_vectors: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.h_maj.shape[0] // 2

    @property
    def real_form(self) -> np.ndarray:
        """Real antisymmetric ``A`` with ``h_maj = i A``."""
        return self.h_maj.imag


@dataclass(frozen=True, eq=False)
class SuperoperatorBdG:
    z: np.ndarray
    y: np.ndarray
    l_bdg: np.ndarray
    trace_m: complex


@dataclass(frozen=True, eq=False)
class NormalMasterModes:
    """Rapidities, Lyapunov solution ``X`` and the left diagonaliser ``V`` of Z.

    ``V Z V^-1 = diag(rapidities)``. The block transformation ``P`` maps the
    superfermion Nambu spinor onto the normal master modes.
    """

    rapidities: np.ndarray
    x_matrix: np.ndarray
    v_matrix: np.ndarray

    def transformation(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(P, P^-1)`` with ``P = [[V, -V X], [0, V^-T]]``."""
        v, x = self.v_matrix, self.x_matrix
        vinv = np.linalg.inv(v)
        zero = np.zeros_like(v)
        p = np.block([[v, -v @ x], [zero, vinv.T]])
        p_inv = np.block([[vinv, x @ v.T], [zero, v.T]])
        return p, p_inv


def _check_size(n: int):
    if n > MAX_SITES:
        raise CapacityError(f"third quantization supports at most {MAX_SITES} sites, got {n}")


def to_majorana(model: RealSpaceModel) -> MajoranaForm:
    n = model.n_sites
    _check_size(n)
    quad = np.kron(model.hopping, np.outer(_UBAR, _U))
    h_maj = 0.5 * (quad - quad.T)
    loss = np.kron(model.loss_coeffs, _U[None, :])
    gain = np.kron(model.gain_coeffs, _UBAR[None, :])
    jumps = np.vstack([loss.reshape(-1, 2 * n), gain.reshape(-1, 2 * n)])
    return MajoranaForm(h_maj, jumps)


def build_bath_matrix(maj: MajoranaForm) -> np.ndarray:
    """``M = J^dag J`` summed over all jumps."""
    j = maj.jump_vectors
    if j.size == 0:
        return np.zeros_like(maj.h_maj)
    return j.conj().T @ j


def build_superoperator(maj: MajoranaForm) -> SuperoperatorBdG:
    m = build_bath_matrix(maj)
    z = 4 * maj.h_maj - 2j * m.real
    y = 2 * m.imag
    zero = np.zeros_like(z)
    l_bdg = np.block([[z, 2 * y], [zero, -z.T]])
    return SuperoperatorBdG(z, y, l_bdg, complex(np.trace(m)))


def superoperator(model: RealSpaceModel) -> SuperoperatorBdG:
    return build_superoperator(to_majorana(model))


def rapidities(superop: SuperoperatorBdG) -> np.ndarray:
    w = eigvals(superop.z)
    return w[lexsort_complex(w)]


def _check_resonance(lam: np.ndarray):
    sums = np.abs(lam[:, None] + lam[None, :])
    worst = sums.min()
    if worst < RESONANCE_TOL:
        raise ResonanceError(float(worst))


def _lyapunov_vectorized(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    if n // 2 > VECTORIZED_MAX_SITES:
        raise CapacityError(f"vectorized Lyapunov solve limited to {VECTORIZED_MAX_SITES} sites")
    eye = np.eye(n)
    op = np.kron(z, eye) + np.kron(eye, z)
    _check_resonance(eigvals(z))
    x = np.linalg.solve(op, -2 * y.reshape(-1))
    return x.reshape(n, n)


def _lyapunov_eigenbasis(z, y, lam, r) -> np.ndarray:
    rinv = np.linalg.inv(r)
    yt = rinv @ y @ rinv.T
    xt = yt / (-(lam[:, None] + lam[None, :]) / 2)
    return r @ xt @ r.T


def solve_lyapunov(superop: SuperoperatorBdG,
                   method: Literal["eigenbasis", "vectorized", "schur"] = "eigenbasis") -> np.ndarray:
    """Solve ``Z X + X Z^T = -2 Y``.

    The eigenbasis route falls back to the dense vectorized solve (or a Schur
    based Sylvester solve for large systems) when Z's eigenvector matrix is
    ill conditioned. The vectorized route allocates O(N^4) memory.
    """
    z, y = superop.z, superop.y
    if not np.any(y):
        return np.zeros_like(z)
    if method == "vectorized":
        return _lyapunov_vectorized(z, y)
    lam, r = eig(z)
    _check_resonance(lam)
    if method == "schur":
        return sla.solve_sylvester(z, z.T, -2 * y)
    if method != "eigenbasis":
        raise ValueError(f"unknown method {method!r}")
    if np.linalg.cond(r) > CONDITION_LIMIT:
        if z.shape[0] // 2 <= VECTORIZED_MAX_SITES:
            return _lyapunov_vectorized(z, y)
        try:
            return sla.solve_sylvester(z, z.T, -2 * y)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise ConditioningError(f"Lyapunov solve failed: {exc}") from exc
    return _lyapunov_eigenbasis(z, y, lam, r)


def normal_master_modes(superop: SuperoperatorBdG) -> NormalMasterModes:
    lam, r = eig(superop.z)
    if np.linalg.cond(r) > 1e12:
        raise ConditioningError("eigenvector matrix of Z is numerically singular")
    order = lexsort_complex(lam)
    lam, r = lam[order], r[:, order]
    x = solve_lyapunov(superop)
    return NormalMasterModes(lam, x, np.linalg.inv(r))


# --- momentum space ----------------------------------------------------------

def majorana_blocks(bloch: BlochModel) -> tuple[dict, dict]:
    """Majorana translation blocks ``H_a`` and ``M_a`` (2B x 2B each)."""
    b = bloch.bands
    pair = np.outer(_UBAR, _U)
    quad = {a: np.kron(h, pair) for a, h in bloch.hoppings.items()}
    h_blocks = {}
    for a in quad:
        other = quad.get(-a, np.zeros((2 * b, 2 * b), dtype=complex))
        h_blocks[a] = 0.5 * (quad[a] - other.T)

    def majorana_stencils(stencils, u):
        return [{a: np.kron(v, u) for a, v in s.items()} for s in stencils]

    jumps = majorana_stencils(bloch.loss_stencils, _U) + majorana_stencils(bloch.gain_stencils, _UBAR)
    return h_blocks, stencil_blocks(jumps, 2 * b)


def bloch_superoperator(bloch: BlochModel, k) -> tuple[np.ndarray, np.ndarray]:
    """``Z(k) = 4H(k) - iM(k) - iM(-k)^T`` and ``Y(k) = iM(-k)^T - iM(k)``."""
    h_blocks, m_blocks = majorana_blocks(bloch)
    shape = (2 * bloch.bands,) * 2
    k = np.asarray(k, dtype=float)
    hk = fourier(h_blocks, k, shape)
    mk = fourier(m_blocks, k, shape)
    mmk_t = np.swapaxes(fourier(m_blocks, -k, shape), -1, -2)
    return 4 * hk - 1j * mk - 1j * mmk_t, 1j * mmk_t - 1j * mk


def bloch_z(bloch: BlochModel, k) -> np.ndarray:
    return bloch_superoperator(bloch, k)[0]
