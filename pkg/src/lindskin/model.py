"""Quadratic loss/gain models and their single-particle non-Hermitian matrices.

A model is a Hermitian hopping matrix plus two families of linear jump
operators, ``L_m = sum_i loss[m, i] c_i`` and ``G_m = sum_i gain[m, i] c_i^dag``.
Everything is dimensionless with hbar = 1.

Bloch matrices use ``A(k) = sum_a A_a exp(+i k a)`` where ``a`` is the row
cell minus the column cell.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import ModelError
from .spectral import eig, lexsort_complex

Boundary = Literal["periodic", "open"]
NhKind = Literal["postselected", "effective-fermion", "effective-boson"]

HERMITIAN_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _coeff_matrix(c, n: int, name: str) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.size == 0:
        return _frozen(np.zeros((0, n)))
    if c.ndim != 2 or c.shape[1] != n:
        raise ModelError(f"{name} must have shape (M, {n}), got {c.shape}")
    return _frozen(c)


@dataclass(frozen=True, eq=False)
class RealSpaceModel:
    hopping: np.ndarray
    loss_coeffs: np.ndarray
    gain_coeffs: np.ndarray
    boundary: Boundary = "open"
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        h = np.asarray(self.hopping, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] == 0:
            raise ModelError(f"hopping must be a non-empty square matrix, got {h.shape}")
        if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
            raise ModelError("hopping matrix is not Hermitian")
        if self.boundary not in ("periodic", "open"):
            raise ModelError(f"unknown boundary {self.boundary!r}")
        n = h.shape[0]
        object.__setattr__(self, "hopping", _frozen(h))
        object.__setattr__(self, "loss_coeffs", _coeff_matrix(self.loss_coeffs, n, "loss_coeffs"))
        object.__setattr__(self, "gain_coeffs", _coeff_matrix(self.gain_coeffs, n, "gain_coeffs"))
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def n_sites(self) -> int:
        return self.hopping.shape[0]


@dataclass(frozen=True, eq=False)
class DissipationMatrices:
    m_loss: np.ndarray
    m_gain: np.ndarray


@dataclass(frozen=True, eq=False)
class NhMatrix:
    """Single-particle non-Hermitian matrix.

    ``constant`` holds the scalar dropped from the many-body operator (for the
    postselected Hamiltonian: ``-(i/2) tr m_gain``). It is never folded into
    ``matrix``.
    """

    matrix: np.ndarray
    kind: NhKind
    constant: complex = 0j


@dataclass(frozen=True, eq=False)
class ComplexSpectrum:
    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray


def build_dissipation(coeffs, n_sites: int | None = None) -> np.ndarray:
    """Return ``coeffs^dag coeffs``, i.e. ``m_ij = sum_m conj(c_mi) c_mj``."""
    c = np.asarray(coeffs, dtype=complex)
    if c.size == 0:
        if n_sites is None:
            n_sites = c.shape[-1] if c.ndim == 2 else 0
        return np.zeros((n_sites, n_sites), dtype=complex)
    if c.ndim != 2:
        raise ModelError(f"coefficient matrix must be 2-D, got {c.shape}")
    if n_sites is not None and c.shape[1] != n_sites:
        raise ModelError(f"coefficient matrix has {c.shape[1]} columns, expected {n_sites}")
    return c.conj().T @ c


def dissipation(model: RealSpaceModel) -> DissipationMatrices:
    n = model.n_sites
    return DissipationMatrices(
        m_loss=build_dissipation(model.loss_coeffs, n),
        m_gain=build_dissipation(model.gain_coeffs, n),
    )


def build_h_post(model: RealSpaceModel) -> NhMatrix:
    d = dissipation(model)
    mat = model.hopping - 0.5j * d.m_loss + 0.5j * d.m_gain.T
    const = -0.5j * np.trace(d.m_gain)
    return NhMatrix(mat, "postselected", complex(const))


def build_h_eff(model: RealSpaceModel, statistics: Literal["fermion", "boson"] = "fermion") -> NhMatrix:
    d = dissipation(model)
    if statistics == "fermion":
        return NhMatrix(model.hopping - 0.5j * d.m_loss - 0.5j * d.m_gain.T, "effective-fermion")
    if statistics == "boson":
        return NhMatrix(model.hopping + 0.5j * d.m_loss - 0.5j * d.m_gain.T, "effective-boson")
    raise ModelError(f"unknown statistics {statistics!r}")


def spectrum(matrix) -> ComplexSpectrum:
    """All eigenpairs, unit-norm right eigenvectors, sorted by (Re, Im)."""
    a = np.asarray(matrix, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ModelError("matrix has non-finite entries")
    w, v = eig(a)
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    order = lexsort_complex(w)
    return ComplexSpectrum(w[order], v[:, order])


# --- translation-invariant models -------------------------------------------

Stencil = Mapping[int, np.ndarray]


def _as_stencil(s: Mapping, bands: int) -> dict[int, np.ndarray]:
    out = {}
    for a, vec in s.items():
        vec = np.atleast_1d(np.asarray(vec, dtype=complex))
        if vec.shape != (bands,):
            raise ModelError(f"stencil entry at offset {a} must have length {bands}")
        out[int(a)] = vec
    return out


@dataclass(frozen=True, eq=False)
class BlochModel:
    """Unit-cell data: hopping blocks ``h_a`` and per-jump coefficient stencils.

    A stencil ``s`` defines, for every home cell ``j``, the jump
    ``sum_{a,b} s[a][b] c_{j+a, b}`` (with ``c^dag`` for gain stencils).
    """

    bands: int
    hoppings: Mapping[int, np.ndarray]
    loss_stencils: Sequence[Stencil] = ()
    gain_stencils: Sequence[Stencil] = ()

    def __post_init__(self):
        b = int(self.bands)
        if b < 1:
            raise ModelError("bands must be positive")
        hops = {}
        for a, blk in self.hoppings.items():
            blk = np.asarray(blk, dtype=complex).reshape(b, b)
            hops[int(a)] = blk
        for a in list(hops):
            hops.setdefault(-a, hops[a].conj().T)
        for a, blk in hops.items():
            if np.max(np.abs(blk - hops[-a].conj().T)) > HERMITIAN_TOL:
                raise ModelError(f"hopping blocks violate h(-a) = h(a)^dag at a={a}")
        object.__setattr__(self, "bands", b)
        object.__setattr__(self, "hoppings", hops)
        object.__setattr__(self, "loss_stencils", tuple(_as_stencil(s, b) for s in self.loss_stencils))
        object.__setattr__(self, "gain_stencils", tuple(_as_stencil(s, b) for s in self.gain_stencils))

    @property
    def range(self) -> int:
        offsets = list(self.hoppings)
        for s in self.loss_stencils + self.gain_stencils:
            offsets.extend(s)
        return max((abs(a) for a in offsets), default=0)


def stencil_blocks(stencils: Sequence[Stencil], bands: int) -> dict[int, np.ndarray]:
    """Translation blocks ``m_a = sum_s sum_p conj(s[p+a]) s[p]^T`` of ``C^dag C``."""
    blocks: dict[int, np.ndarray] = {}
    for s in stencils:
        for p, vp in s.items():
            for q, vq in s.items():
                a = q - p
                blk = blocks.setdefault(a, np.zeros((bands, bands), dtype=complex))
                blk += np.outer(vq.conj(), vp)
    return blocks


def fourier(blocks: Mapping[int, np.ndarray], k, shape: tuple[int, ...]) -> np.ndarray:
    """``sum_a blocks[a] exp(i k a)`` for scalar or 1-D ``k``."""
    k = np.asarray(k, dtype=float)
    out = np.zeros(k.shape + shape, dtype=complex)
    for a, blk in blocks.items():
        phase = np.exp(1j * k * a)
        out += phase[..., None, None] * blk
    return out


def bloch_matrix(bloch: BlochModel, kind: str, k) -> np.ndarray:
    """Bloch matrix of the postselected or effective (fermion) Hamiltonian.

    Gain enters via ``m_gain(-k)^T``, the Fourier image of the transposed
    real-space gain matrix.
    """
    b = bloch.bands
    shape = (b, b)
    h = fourier(bloch.hoppings, k, shape)
    ml = fourier(stencil_blocks(bloch.loss_stencils, b), k, shape)
    mg = fourier(stencil_blocks(bloch.gain_stencils, b), -np.asarray(k, dtype=float), shape)
    mg_t = np.swapaxes(mg, -1, -2)
    if kind == "postselected":
        return h - 0.5j * ml + 0.5j * mg_t
    if kind == "effective-fermion":
        return h - 0.5j * ml - 0.5j * mg_t
    if kind == "effective-boson":
        return h + 0.5j * ml - 0.5j * mg_t
    raise ModelError(f"unknown Bloch matrix kind {kind!r}")


def to_real_space(bloch: BlochModel, n_cells: int, boundary: Boundary) -> RealSpaceModel:
    """Lay the unit cell out on ``n_cells`` cells.

    Periodic: one jump per home cell, offsets wrap (and accumulate when the
    chain is shorter than twice the range). Open: wraparound hopping is
    dropped and every jump whose stencil touches the chain is kept, truncated
    to the sites inside it, so that bulk rows stay translation invariant.
    """
    if n_cells < 1:
        raise ModelError("n_cells must be positive")
    b = bloch.bands
    n = n_cells * b
    hop = np.zeros((n, n), dtype=complex)
    for a, blk in bloch.hoppings.items():
        for j in range(n_cells):
            i = j + a
            if boundary == "periodic":
                i %= n_cells
            elif not 0 <= i < n_cells:
                continue
            hop[i * b:(i + 1) * b, j * b:(j + 1) * b] += blk

    def jumps(stencils):
        rows = []
        for s in stencils:
            if not s:
                continue
            lo, hi = min(s), max(s)
            homes = range(n_cells) if boundary == "periodic" else range(-hi, n_cells - lo)
            for j in homes:
                row = np.zeros(n, dtype=complex)
                for a, vec in s.items():
                    i = j + a
                    if boundary == "periodic":
                        i %= n_cells
                    elif not 0 <= i < n_cells:
                        continue
                    row[i * b:(i + 1) * b] += vec
                if np.any(row):
                    rows.append(row)
        return np.array(rows).reshape(len(rows), n)

    flags = ()
    if boundary == "periodic" and n_cells <= 2 * bloch.range:
        flags = ("periodic_wrap_overlap",)
    return RealSpaceModel(hop, jumps(bloch.loss_stencils), jumps(bloch.gain_stencils), boundary, flags)


def make_hatano_nelson_bloch(t: float, gamma_l: float, gamma_g: float,
                             variant: str = "standard") -> BlochModel:
    if min(t, gamma_l, gamma_g) < 0:
        raise ModelError("t, gamma_l and gamma_g must be non-negative")
    if variant not in ("standard", "flipped_gain", "flipped-gain"):
        raise ModelError(f"unknown variant {variant!r}")
    sl, sg = np.sqrt(gamma_l), np.sqrt(gamma_g)
    gain_sign = -1j if variant == "standard" else 1j
    loss = [{0: [sl], 1: [-1j * sl]}] if gamma_l > 0 else []
    gain = [{0: [sg], 1: [gain_sign * sg]}] if gamma_g > 0 else []
    return BlochModel(1, {1: [[t]], -1: [[t]]}, loss, gain)


def make_hatano_nelson(t: float, gamma_l: float, gamma_g: float, n_sites: int,
                       boundary: Boundary = "periodic", variant: str = "standard"
                       ) -> tuple[RealSpaceModel, BlochModel]:
    """Lindbladian Hatano-Nelson chain.

    ``L_i = sqrt(gamma_l) (c_i - i c_{i+1})`` and
    ``G_i = sqrt(gamma_g) (c_i^dag -/+ i c_{i+1}^dag)`` (``-`` standard,
    ``+`` flipped_gain), reciprocal hopping ``t``.
    """
    if n_sites < 2:
        raise ModelError("n_sites must be at least 2")
    bloch = make_hatano_nelson_bloch(t, gamma_l, gamma_g, variant)
    return to_real_space(bloch, n_sites, boundary), bloch


def hatano_nelson_closed_forms(t: float, gamma_l: float, gamma_g: float, k,
                               variant: str = "standard") -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (post, eff) Bloch symbols of the chain, for reference."""
    k = np.asarray(k, dtype=float)
    g, d = gamma_l + gamma_g, gamma_l - gamma_g
    kin = 2 * t * np.cos(k)
    if variant == "standard":
        return kin + 1j * g * np.sin(k) - 1j * d, kin + 1j * d * np.sin(k) - 1j * g
    return kin + 1j * d * np.sin(k) - 1j * d, kin + 1j * g * np.sin(k) - 1j * g
