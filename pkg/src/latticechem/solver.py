"""Ground-state and low-spectrum eigensolves, plus orbital identification.

Sparse solves use restarted Lanczos (ARPACK) with deterministic seeded start
vectors; small problems fall back to dense diagonalization, which doubles as
the oracle in tests. Orbital energies on a finite open lattice are naturally
measured relative to the free-lattice ground energy of the same box, which is
what `free_lattice_energy` provides.
"""

from __future__ import annotations

import csv
import math

import numpy as np
import scipy.sparse.linalg as spla

from .lattice import LatticeGeometry
from .operators import SparseOperator

DENSE_FALLBACK_DIM = 2000


class ConvergenceError(RuntimeError):
    """Eigensolve failed to reach the requested residual."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def _start_vector(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def low_spectrum(
    op: SparseOperator,
    k: int,
    tol: float = 1e-10,
    seed: int = 7,
    v0: np.ndarray | None = None,
    maxiter: int | None = None,
    dense_below: int = DENSE_FALLBACK_DIM,
) -> tuple[np.ndarray, np.ndarray]:
    """k lowest eigenpairs, ascending; vectors orthonormal in columns."""
    dim = op.dim
    if k < 1 or k > dim:
        raise ValueError(f"need 1 <= k <= {dim}, got {k}")
    if dim <= dense_below or k >= dim - 1:
        vals, vecs = np.linalg.eigh(op.matrix.toarray())
        return vals[:k], vecs[:, :k]
    if v0 is None:
        v0 = _start_vector(dim, seed)
    # pad the request so degenerate blocks at the cut are fully resolved
    k_eff = min(dim - 1, k + 2)
    try:
        vals, vecs = spla.eigsh(
            op.matrix, k=k_eff, which="SA", tol=tol, v0=np.real(v0), maxiter=maxiter,
            ncv=min(dim, max(2 * k_eff + 1, 24)),
        )
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(
            f"eigensolve did not converge (requested k={k}, tol={tol}): {exc}",
        ) from exc
    order = np.argsort(vals)[:k]
    vals, vecs = vals[order], vecs[:, order]
    scale = max(op.norm_estimate(), 1.0)
    res = np.array(
        [np.linalg.norm(op.matrix @ vecs[:, m] - vals[m] * vecs[:, m]) for m in range(k)]
    )
    if np.any(res > max(tol, 1e-12) * scale * 10):
        raise ConvergenceError(
            f"eigenpair residuals {res} exceed {tol} * ||H||_est = {tol * scale}",
            residuals=res,
        )
    return vals, vecs


def ground_state(
    op: SparseOperator,
    tol: float = 1e-10,
    seed: int = 7,
    v0: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    vals, vecs = low_spectrum(op, 1, tol=tol, seed=seed, v0=v0)
    return float(vals[0]), vecs[:, 0]


def degeneracy_groups(values: np.ndarray, scale: float, rel_tol: float = 1e-9) -> list[list[int]]:
    """Indices grouped into near-degenerate blocks at rel_tol * scale."""
    groups: list[list[int]] = []
    for m, v in enumerate(values):
        if groups and abs(v - values[groups[-1][-1]]) <= rel_tol * max(scale, 1.0):
            groups[-1].append(m)
        else:
            groups.append([m])
    return groups


def principal_energy(n: int, a0: float, J: float = 1.0) -> float:
    """Continuum level -J / (a0^2 (2n-1)^2) of the planar 1/r atom."""
    if n < 1:
        raise ValueError(f"principal quantum number must be >= 1, got {n}")
    if a0 <= 0:
        raise ValueError(f"a0 must be > 0, got {a0}")
    return -J / (a0**2 * (2 * n - 1) ** 2)


def free_lattice_energy(g: LatticeGeometry, J: float = 1.0) -> float:
    """Ground energy of the bare hopping model on the open lx-by-ly box.

    Finite-box reference for orbital energies: a level is bound when it sits
    below this value.
    """
    return -2.0 * J * (math.cos(math.pi / (g.lx + 1)) + math.cos(math.pi / (g.ly + 1)))


_ORBITAL_LABELS = {
    (0, 0): "1s",
    (0, 1): "2s",
    (1, 0): "2p",
    (1, 1): "3p",
    (2, 0): "3d",
    (3, 0): "4f",
}


def _real_aligned(psi: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the state is (nearly) real, then take Re."""
    k = int(np.argmax(np.abs(psi)))
    phase = psi[k] / abs(psi[k]) if abs(psi[k]) > 0 else 1.0
    return np.real(psi / phase)


def classify_orbital(
    psi: np.ndarray,
    g: LatticeGeometry,
    nucleus_position: tuple[float, float],
    max_m: int = 4,
    dominance: float = 0.5,
) -> str:
    """Label a single-particle state by angular and radial node structure.

    Angular character comes from the weight of cos(m*theta) / sin(m*theta)
    ring harmonics about the nucleus; radial nodes are sign changes of the
    dominant-m radial profile. States without a clearly dominant harmonic
    come back as "other".
    """
    if psi.shape[0] != g.n_sites:
        raise ValueError("state and lattice size differ")
    amp = _real_aligned(np.asarray(psi))
    xs, ys = g.coordinate_arrays()
    dx, dy = xs - nucleus_position[0], ys - nucleus_position[1]
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    rbin = np.rint(r).astype(int)
    nbins = rbin.max() + 1

    weights = np.zeros(max_m + 1)
    profiles = []
    for m in range(max_m + 1):
        pc = np.bincount(rbin, weights=amp * np.cos(m * theta), minlength=nbins)
        ps = np.bincount(rbin, weights=amp * np.sin(m * theta), minlength=nbins)
        wc, ws = float(pc @ pc), float(ps @ ps)
        weights[m] = wc + ws
        profiles.append(pc if wc >= ws else ps)
    total = weights.sum()
    if total <= 0:
        return "other"
    m_star = int(np.argmax(weights))
    if weights[m_star] / total < dominance:
        return "other"

    prof = profiles[m_star]
    floor = 0.02 * np.abs(prof).max()
    signs = np.sign(prof[np.abs(prof) > floor])
    nodes = int(np.count_nonzero(signs[1:] != signs[:-1]))
    return _ORBITAL_LABELS.get((m_star, nodes), "other")


def orient_degenerate_pair(
    vecs: np.ndarray, g: LatticeGeometry, axis: str = "x"
) -> np.ndarray:
    """Combination of two degenerate states that is even under the off-axis mirror.

    Used to pick the 2p orbital pointing along the requested axis out of an
    arbitrarily mixed degenerate pair. The mirror is about the lattice center.
    """
    if vecs.shape[1] != 2:
        raise ValueError("expected exactly two degenerate states")
    xs, ys = g.coordinate_arrays()
    if axis == "x":
        mx, my = xs, g.ly - 1 - ys  # mirror y; 2p_x is even under it
    else:
        mx, my = g.lx - 1 - xs, ys
    perm = mx + g.lx * my
    refl = vecs[perm, :]
    overlap = vecs.T @ refl
    sym = 0.5 * (overlap + overlap.T)
    w, u = np.linalg.eigh(sym)
    combo = vecs @ u[:, np.argmax(w)]
    return combo / np.linalg.norm(combo)


def export_eigenpairs_csv(path, values, vectors=None):
    """CSV of (index, energy); optional second file of per-site amplitudes."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["index", "energy"])
        for m, v in enumerate(values):
            writer.writerow([m, repr(float(v))])
    if vectors is not None:
        amp_path = str(path).replace(".csv", "_amplitudes.csv")
        with open(amp_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["site"] + [f"state_{m}" for m in range(vectors.shape[1])])
            for site in range(vectors.shape[0]):
                writer.writerow([site] + [repr(float(np.real(a))) for a in vectors[site]])
