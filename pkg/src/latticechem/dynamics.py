"""Ramp schedules and norm-preserving evolution under H(t) = sum_k s_k(t) H_k.

The propagator is a fourth-order commutator-free Magnus scheme: each step
applies two exponentials of fixed linear combinations of the parts evaluated
at the two Gauss points, each computed in a small Lanczos subspace. Step
sizes adapt to the operator norm, the drive period (at least 40 steps per
period), and the Krylov convergence estimate; sampling times are always hit
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import diags as sparse_diags

from .operators import SparseOperator

SHAPES = ("constant", "sin4_up", "sin4_down", "sinusoid")


@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    shape: str
    v0: float = 0.0
    v1: float = 0.0
    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown segment shape {self.shape!r}")
        if not self.t1 > self.t0:
            raise ValueError(f"segment needs t1 > t0, got [{self.t0}, {self.t1}]")
        for v in (self.v0, self.v1):
            if not math.isfinite(v):
                raise ValueError("segment values must be finite")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        tau = np.clip((t - self.t0) / (self.t1 - self.t0), 0.0, 1.0)
        if self.shape == "constant":
            return np.broadcast_to(np.float64(self.v0), tau.shape).copy()
        if self.shape == "sin4_up":
            return self.v0 + (self.v1 - self.v0) * np.sin(0.5 * np.pi * tau) ** 4
        if self.shape == "sin4_down":
            # time mirror of sin4_up: starts at v0, ends at v1
            return self.v1 + (self.v0 - self.v1) * np.sin(0.5 * np.pi * (1.0 - tau)) ** 4
        return self.v1 * np.sin(self.omega * (t - self.t0) + self.phase)

    def end_value(self) -> float:
        return float(self.value(self.t1))

    def reversed(self, t_lo: float, t_hi: float) -> "Segment":
        """Mirror of this segment under t -> t_lo + t_hi - t."""
        nt0, nt1 = t_lo + t_hi - self.t1, t_lo + t_hi - self.t0
        if self.shape == "constant":
            return Segment(nt0, nt1, "constant", self.v0, self.v0)
        if self.shape == "sin4_up":
            return Segment(nt0, nt1, "sin4_down", self.v1, self.v0)
        if self.shape == "sin4_down":
            return Segment(nt0, nt1, "sin4_up", self.v1, self.v0)
        span = self.t1 - self.t0
        return Segment(
            nt0, nt1, "sinusoid", 0.0, self.v1,
            omega=-self.omega, phase=self.omega * span + self.phase,
        )


@dataclass(frozen=True)
class Schedule:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        for a, b in zip(segs, segs[1:]):
            if abs(a.t1 - b.t0) > 1e-12 * max(1.0, abs(a.t1)):
                raise ValueError(f"segments not contiguous at t = {a.t1} vs {b.t0}")
        object.__setattr__(self, "segments", segs)

    @property
    def span(self) -> tuple[float, float]:
        return self.segments[0].t0, self.segments[-1].t1

    def value(self, t: float) -> float:
        t0, t1 = self.span
        tc = min(max(t, t0), t1)
        for seg in self.segments:
            if tc <= seg.t1 or seg is self.segments[-1]:
                return float(seg.value(tc))
        raise AssertionError("unreachable")

    def values(self, ts) -> np.ndarray:
        return np.array([self.value(t) for t in np.atleast_1d(ts)])

    def reversed(self, t_lo: float | None = None, t_hi: float | None = None) -> "Schedule":
        lo, hi = self.span
        t_lo = lo if t_lo is None else t_lo
        t_hi = hi if t_hi is None else t_hi
        segs = [s.reversed(t_lo, t_hi) for s in reversed(self.segments)]
        return Schedule(tuple(segs))

    def min_sinusoid_period(self) -> float | None:
        periods = [
            2 * np.pi / abs(s.omega)
            for s in self.segments
            if s.shape == "sinusoid" and s.omega != 0.0
        ]
        return min(periods) if periods else None


def schedule_value(s: Schedule, t: float) -> float:
    return s.value(t)


def constant_schedule(v: float, t0: float, t1: float) -> Schedule:
    return Schedule((Segment(t0, t1, "constant", v, v),))


def piecewise(segments) -> Schedule:
    return Schedule(tuple(segments))


class StiffnessError(RuntimeError):
    """Step size underflowed while trying to meet the Krylov tolerance."""


@dataclass
class TimeDependentHamiltonian:
    """Static sparse parts with scalar schedules; H(t) = sum_k s_k(t) H_k."""

    parts: list[tuple[SparseOperator, Schedule]]

    def __post_init__(self):
        dims = {op.dim for op, _ in self.parts}
        if len(dims) != 1:
            raise ValueError(f"all parts must share one dimension, got {dims}")
        self._split_parts()

    def _split_parts(self):
        # purely diagonal parts collapse to vectors so a step needs no extra matvec
        self._is_diag = []
        self._diags = []
        for op, _ in self.parts:
            m = op.matrix.tocsr()
            diag = m.diagonal()
            off_diag_nnz = m.nnz - np.count_nonzero(diag)
            is_diag = off_diag_nnz <= 0 or (m - sparse_diags(diag)).nnz == 0
            self._is_diag.append(is_diag)
            self._diags.append(diag if is_diag else None)

    @property
    def dim(self) -> int:
        return self.parts[0][0].dim

    def span(self) -> tuple[float, float]:
        los, his = zip(*(s.span for _, s in self.parts))
        return min(los), max(his)

    def coefficients(self, t: float) -> np.ndarray:
        return np.array([s.value(t) for _, s in self.parts])

    def norm_estimate(self, t: float) -> float:
        return float(
            sum(abs(s.value(t)) * op.norm_estimate() for op, s in self.parts)
        )

    def matvec(self, t: float, psi: np.ndarray) -> np.ndarray:
        coeffs = self.coefficients(t)
        d = None
        out = np.zeros_like(psi)
        for c, (op, _), is_diag, diag in zip(
            coeffs, self.parts, self._is_diag, self._diags
        ):
            if c == 0.0:
                continue
            if is_diag:
                d = c * diag if d is None else d + c * diag
            else:
                out += c * (op.matrix @ psi)
        if d is not None:
            out += d * psi
        return out

    def frozen_matvec(self, t: float):
        """Closure applying H(t) with coefficients frozen at t."""
        return self.combination_matvec(self.coefficients(t))

    def combination_matvec(self, coeffs):
        """Closure applying sum_k coeffs[k] H_k."""
        diag = None
        gen = []
        for c, (op, _), is_diag, dvec in zip(
            coeffs, self.parts, self._is_diag, self._diags
        ):
            if c == 0.0:
                continue
            if is_diag:
                diag = c * dvec if diag is None else diag + c * dvec
            else:
                gen.append((c, op.matrix))

        def mv(x):
            out = diag * x if diag is not None else np.zeros_like(x)
            for c, m in gen:
                out += c * (m @ x)
            return out

        return mv

    def combination_norm_estimate(self, coeffs) -> float:
        return float(
            sum(abs(c) * op.norm_estimate() for c, (op, _) in zip(coeffs, self.parts))
        )

    def reversed(self) -> "TimeDependentHamiltonian":
        """Schedules run backwards: the physical reversal of a ramp protocol.

        This is what an experiment can do; it is not the exact inverse of the
        forward evolution unless the dynamics is adiabatic.
        """
        lo, hi = self.span()
        return TimeDependentHamiltonian(
            [(op, s.reversed(lo, hi)) for op, s in self.parts]
        )

    def inverse(self) -> "TimeDependentHamiltonian":
        """Generator of the exact inverse propagation: evolving under it over
        the same span applies the adjoint of the forward propagator."""
        lo, hi = self.span()
        return TimeDependentHamiltonian(
            [(op.scaled(-1.0), s.reversed(lo, hi)) for op, s in self.parts]
        )


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Squared overlap |<a|b>|^2."""
    if a.shape != b.shape:
        raise ValueError(f"state dims differ: {a.shape} vs {b.shape}")
    return float(abs(np.vdot(a, b)) ** 2)


def _krylov_step(matvec, psi, dt, tol, m_max):
    """One exp(-i dt H) psi via Lanczos; returns (phi, err) or None if unconverged."""
    beta0 = np.linalg.norm(psi)
    if beta0 == 0.0:
        return psi, 0.0
    v = np.empty((m_max + 1, psi.shape[0]), dtype=complex)
    v[0] = psi / beta0
    alphas: list[float] = []
    betas: list[float] = []
    w = matvec(v[0])
    alphas.append(float(np.real(np.vdot(v[0], w))))
    w = w - alphas[0] * v[0]
    for m in range(1, m_max + 1):
        b = float(np.linalg.norm(w))
        if b < 1e-14 * max(1.0, abs(alphas[0])):
            phi, _ = _small_expm(alphas, betas, dt)
            return beta0 * (phi @ v[: len(alphas)]), 0.0
        v[m] = w / b
        # full reorthogonalization keeps the basis clean at these small m
        v[m] -= v[:m].T @ (v[:m].conj() @ v[m])
        v[m] /= np.linalg.norm(v[m])
        betas.append(b)
        w = matvec(v[m]) - b * v[m - 1]
        alphas.append(float(np.real(np.vdot(v[m], w))))
        w = w - alphas[m] * v[m]
        if m >= 2 or m == m_max:
            y, last = _small_expm(alphas, betas, dt)
            err = b * abs(last)
            if err <= tol:
                return beta0 * (y @ v[: len(alphas)]), err
    return None


def _small_expm(alphas, betas, dt):
    """exp(-i dt T) e1 for the tridiagonal Lanczos matrix; returns (y, y[-1])."""
    m = len(alphas)
    t_mat = np.diag(np.asarray(alphas, dtype=float))
    if betas:
        off = np.asarray(betas, dtype=float)
        t_mat += np.diag(off, 1) + np.diag(off, -1)
    vals, vecs = np.linalg.eigh(t_mat)
    y = vecs @ (np.exp(-1j * dt * vals) * vecs[0].conj())
    return y, y[m - 1]


@dataclass
class EvolveResult:
    times: np.ndarray
    records: list
    final_state: np.ndarray

    def column(self, key) -> np.ndarray:
        return np.array([r[key] for r in self.records])


def evolve(
    psi0: np.ndarray,
    ham: TimeDependentHamiltonian,
    t0: float,
    t1: float,
    step_tol: float = 1e-8,
    n_samples: int = 200,
    max_dt: float | None = None,
    krylov_dim: int = 30,
    observer=None,
) -> EvolveResult:
    """Propagate psi0 from t0 to t1, recording observables on a uniform grid.

    step_tol is the Krylov error budget for the whole run; the per-step
    tolerance is scaled by dt/(t1-t0). The returned trajectory includes both
    endpoints.
    """
    if psi0.shape[0] != ham.dim:
        raise ValueError(f"state dim {psi0.shape[0]} != Hamiltonian dim {ham.dim}")
    if t1 <= t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")
    span = t1 - t0
    psi = np.asarray(psi0, dtype=complex).copy()

    cap = span if max_dt is None else min(max_dt, span)
    for _, sched in ham.parts:
        period = sched.min_sinusoid_period()
        if period is not None:
            cap = min(cap, period / 64.0)

    sample_times = np.linspace(t0, t1, n_samples + 1)
    records = []

    def record(t):
        row = {"t": t, "norm": float(np.linalg.norm(psi))}
        if observer is not None:
            row.update(observer(t, psi))
        records.append(row)

    # align steps to segment boundaries and re-check the error after each one
    boundaries = sorted(
        {b for _, sched in ham.parts for seg in sched.segments for b in (seg.t0, seg.t1)}
    )

    def next_boundary(t):
        for b in boundaries:
            if b > t + 1e-12 * span:
                return b
        return t1

    record(t0)
    dt_hint = cap
    check_countdown = 0  # Richardson check on the first step, then every 8th
    for s0, s1 in zip(sample_times[:-1], sample_times[1:]):
        t = s0
        while t < s1 - 1e-12 * span:
            edge = next_boundary(t)
            if edge <= s1:
                check_countdown = 0
            dt = min(dt_hint, cap, s1 - t, max(edge - t, 1e-12 * span))
            # keep each exponential's norm moderate so the Krylov space stays small
            hnorm = ham.norm_estimate(t + dt / 2)
            if hnorm * dt > krylov_dim:
                dt = krylov_dim / hnorm
            ktol = lambda d: step_tol * d / span / 6.0
            if check_countdown <= 0:
                # step-doubling error control: advance with two half steps,
                # measure the defect against one full step
                while True:
                    full = _cf4_step(ham, psi, t, dt, ktol(dt), krylov_dim)
                    half = None
                    if full is not None:
                        half = _cf4_step(ham, psi, t, dt / 2, ktol(dt), krylov_dim)
                        if half is not None:
                            half = _cf4_step(
                                ham, half, t + dt / 2, dt / 2, ktol(dt), krylov_dim
                            )
                    if half is None:
                        dt *= 0.5
                    else:
                        err = float(np.linalg.norm(full - half))
                        tol_here = step_tol * dt / span
                        if err <= tol_here:
                            psi = half
                            grow = 0.85 * (tol_here / max(err, 1e-300)) ** 0.2
                            dt_hint = dt * min(max(grow, 0.3), 2.5)
                            check_countdown = 8
                            break
                        dt *= max(0.25, 0.7 * (tol_here / err) ** 0.2)
                    if dt < 1e-12 * span:
                        raise StiffnessError(
                            f"step size underflow at t = {t}; H may be too stiff"
                        )
            else:
                trial = dt
                while True:
                    out = _cf4_step(ham, psi, t, dt, ktol(dt), krylov_dim)
                    if out is not None:
                        break
                    dt *= 0.5
                    if dt < 1e-12 * span:
                        raise StiffnessError(
                            f"step size underflow at t = {t}; H may be too stiff"
                        )
                psi = out
                if dt < 0.9 * trial:  # Krylov forced a smaller step; remember it
                    dt_hint = dt
                check_countdown -= 1
            t += dt
            dt_hint = min(dt_hint, cap)
        record(s1)

    return EvolveResult(sample_times, records, psi)


# fourth-order commutator-free Magnus coefficients on the two Gauss points
_CF4_NODES = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF4_A = (0.25 + math.sqrt(3) / 6, 0.25 - math.sqrt(3) / 6)


def _cf4_step(ham, psi, t, dt, tol, krylov_dim):
    """psi(t+dt) = exp(-i dt (a2 H1 + a1 H2)) exp(-i dt (a1 H1 + a2 H2)) psi."""
    c1 = ham.coefficients(t + _CF4_NODES[0] * dt)
    c2 = ham.coefficients(t + _CF4_NODES[1] * dt)
    first = _CF4_A[0] * c1 + _CF4_A[1] * c2
    second = _CF4_A[1] * c1 + _CF4_A[0] * c2
    out = _krylov_step(ham.combination_matvec(first), psi, dt, tol / 2, krylov_dim)
    if out is None:
        return None
    out = _krylov_step(ham.combination_matvec(second), out[0], dt, tol / 2, krylov_dim)
    if out is None:
        return None
    return out[0]
