"""Point-gap topology: winding numbers, gap margins, skin profiles, phase diagrams."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Literal, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import GapClosedError, GridTooCoarseError, ModelError
from .model import BlochModel, ComplexSpectrum, bloch_matrix, make_hatano_nelson_bloch
from .spectral import eigvals
from .thirdq import bloch_z

GAP_TOL = 1e-8
PHASE_TOL = 1e-6
# a larger single-step phase jump means the determinant is under-resolved
MAX_PHASE_STEP = np.pi / 2
MIN_K_GRID = 64

Evaluator = Callable[[np.ndarray], np.ndarray]
EPolicy = Union[Literal["centroid"], complex]


@dataclass(frozen=True)
class BlochEvaluator:
    """Picklable ``k -> matrix`` map for one of a model's Bloch matrices."""

    bloch: BlochModel
    kind: Literal["postselected", "effective-fermion", "z"]

    def __call__(self, k):
        if self.kind == "z":
            return bloch_z(self.bloch, k)
        return bloch_matrix(self.bloch, self.kind, k)


@dataclass(frozen=True)
class WindingReport:
    e_ref: complex
    winding: int
    gap_margin: float
    k_grid: int
    phase_defect: float


@dataclass(frozen=True)
class SibcResult:
    kind: Literal["outside", "on-spectrum", "interior"]
    winding: int | None
    gap_margin: float


@dataclass(frozen=True, eq=False)
class SkinProfile:
    density: np.ndarray
    center_of_mass: float
    side: Literal["left", "right", "none"]


@dataclass(frozen=True)
class PhaseDiagramCell:
    gamma_l: float
    gamma_g: float
    nu_post: int | None
    nu_eff: int | None
    nu_z: int | None
    gap_post: float
    gap_eff: float
    status: str


def k_points(k_grid: int) -> np.ndarray:
    return 2 * np.pi * np.arange(k_grid) / k_grid


def _stack(evaluator: Evaluator, k: np.ndarray) -> np.ndarray:
    a = np.asarray(evaluator(k), dtype=complex)
    if a.ndim == 1:
        a = a[:, None, None]
    return a


def _band_distance(evaluator, k, e_ref) -> np.ndarray:
    lam = eigvals(_stack(evaluator, np.atleast_1d(k)))
    return np.abs(lam - e_ref).min(axis=-1)


def _margin_from_grid(evaluator, k, dist, e_ref, n_refine=8) -> float:
    """Grid minimum, polished by bounded 1-D minimisation around local minima."""
    best = float(dist.min())
    kg = len(k)
    is_min = (dist <= np.roll(dist, 1)) & (dist <= np.roll(dist, -1))
    cand = np.flatnonzero(is_min)
    cand = cand[np.argsort(dist[cand])][:n_refine]
    h = 2 * np.pi / kg
    for n in cand:
        res = minimize_scalar(lambda q: float(_band_distance(evaluator, q, e_ref)[0]),
                              bounds=(k[n] - h, k[n] + h), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def point_gap_margin(evaluator: Evaluator, e_ref: complex, k_grid: int = 1024) -> float:
    """Distance from ``e_ref`` to the PBC band curves."""
    k = k_points(k_grid)
    return _margin_from_grid(evaluator, k, _band_distance(evaluator, k, e_ref), e_ref)


def centroid_energy(evaluator: Evaluator, k_grid: int = 1024) -> complex:
    lam = eigvals(_stack(evaluator, k_points(k_grid)))
    return complex(lam.mean())


def resolve_energy(policy: EPolicy, evaluator: Evaluator, k_grid: int) -> complex:
    if isinstance(policy, str):
        if policy != "centroid":
            raise ValueError(f"unknown reference-energy policy {policy!r}")
        return centroid_energy(evaluator, k_grid)
    return complex(policy)


def winding_number(evaluator: Evaluator, e_ref: complex, k_grid: int = 1024) -> WindingReport:
    """Winding of ``det[A(k) - E]`` over the Brillouin zone.

    Accumulates principal-value phase increments between neighbouring grid
    points (the grid closes on itself since A is 2pi-periodic).
    """
    if k_grid < MIN_K_GRID:
        raise ValueError(f"k_grid must be at least {MIN_K_GRID}")
    e_ref = complex(e_ref)
    k = k_points(k_grid)
    a = _stack(evaluator, k)
    eye = np.eye(a.shape[-1])
    dist = np.abs(eigvals(a) - e_ref).min(axis=-1)
    margin = _margin_from_grid(evaluator, k, dist, e_ref)
    if margin < GAP_TOL:
        raise GapClosedError(margin, e_ref)
    det = np.linalg.det(a - e_ref * eye)
    steps = np.angle(np.roll(det, -1) / det)
    if np.max(np.abs(steps)) > MAX_PHASE_STEP:
        raise GridTooCoarseError(k_grid, "phase step exceeds pi/2")
    raw = steps.sum() / (2 * np.pi)
    nu = int(round(raw))
    defect = float(abs(raw - nu))
    if defect > PHASE_TOL:
        raise GridTooCoarseError(k_grid, f"phase defect {defect:.2e}")
    return WindingReport(e_ref, nu, margin, k_grid, defect)


def winding_number_adaptive(evaluator: Evaluator, e_ref: complex, k_grid: int = 1024,
                            max_grid: int = 1 << 16) -> WindingReport:
    """Retry on a doubled grid until the phase is resolved."""
    while True:
        try:
            return winding_number(evaluator, e_ref, k_grid)
        except GridTooCoarseError:
            if 2 * k_grid > max_grid:
                raise
            k_grid *= 2


def winding_z(z_evaluator: Union[BlochModel, Evaluator], e_ref: complex,
              k_grid: int = 1024) -> WindingReport:
    if isinstance(z_evaluator, BlochModel):
        z_evaluator = BlochEvaluator(z_evaluator, "z")
    return winding_number(z_evaluator, e_ref, k_grid)


def sibc_classify(evaluator: Evaluator, e_ref: complex, k_grid: int = 1024) -> SibcResult:
    """Classify ``e_ref`` against the semi-infinite spectrum.

    That spectrum is the PBC curve plus every point it winds around.
    """
    try:
        rep = winding_number_adaptive(evaluator, e_ref, k_grid)
    except GapClosedError as exc:
        return SibcResult("on-spectrum", None, exc.margin)
    kind = "interior" if rep.winding != 0 else "outside"
    return SibcResult(kind, rep.winding, rep.gap_margin)


def skin_profile(spec: ComplexSpectrum, threshold: float = 0.05) -> SkinProfile:
    vecs = spec.right_eigenvectors
    if vecs is None or np.size(vecs) == 0:
        raise ValueError("spectrum carries no eigenvectors")
    vecs = np.asarray(vecs)
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    density = (np.abs(vecs) ** 2).sum(axis=1)
    n = density.size
    x = np.arange(1, n + 1)
    com = float((x * density).sum() / density.sum())
    shift = com - (n + 1) / 2
    side = "right" if shift > threshold * n else "left" if shift < -threshold * n else "none"
    return SkinProfile(density, com, side)


# --- phase diagrams -----------------------------------------------------------

@dataclass(frozen=True)
class HatanoNelsonFamily:
    t: float = 1.0
    variant: str = "standard"

    def __call__(self, gamma_l: float, gamma_g: float) -> BlochModel:
        return make_hatano_nelson_bloch(self.t, gamma_l, gamma_g, self.variant)


def _try_winding(evaluator, policy, k_grid):
    e = resolve_energy(policy, evaluator, k_grid)
    try:
        rep = winding_number_adaptive(evaluator, e, k_grid)
        return rep.winding, rep.gap_margin, None
    except GapClosedError as exc:
        return None, exc.margin, "gap-closed"
    except GridTooCoarseError:
        return None, point_gap_margin(evaluator, e, k_grid), "unresolved"


def phase_diagram_cell(family, gamma_l: float, gamma_g: float, e_policy: EPolicy = "centroid",
                       k_grid: int = 1024) -> PhaseDiagramCell:
    bloch = family(gamma_l, gamma_g)
    results = {name: _try_winding(BlochEvaluator(bloch, kind), e_policy, k_grid)
               for name, kind in (("post", "postselected"), ("eff", "effective-fermion"), ("z", "z"))}
    issues = [f"{name}:{res[2]}" for name, res in results.items() if res[2]]
    return PhaseDiagramCell(
        float(gamma_l), float(gamma_g),
        results["post"][0], results["eff"][0], results["z"][0],
        results["post"][1], results["eff"][1],
        ";".join(issues) if issues else "ok",
    )


def _cell_job(args):
    return phase_diagram_cell(*args)


def phase_diagram(family, gamma_l_values: Sequence[float], gamma_g_values: Sequence[float],
                  e_policy: EPolicy = "centroid", k_grid: int = 1024,
                  workers: int | None = 1) -> list[PhaseDiagramCell]:
    """Scan a (gamma_l, gamma_g) grid; cells come back row-major in gamma_l.

    Cells are independent; ``workers > 1`` farms them out to processes (the
    family must then be picklable). Results do not depend on scheduling.
    """
    gl, gg = list(gamma_l_values), list(gamma_g_values)
    if not gl or not gg:
        raise ModelError("phase-diagram grids must be non-empty")
    jobs = [(family, a, b, e_policy, k_grid) for a in gl for b in gg]
    if workers is None or workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell_job, jobs, chunksize=max(1, math.ceil(len(jobs) / 32))))
    return [_cell_job(j) for j in jobs]
