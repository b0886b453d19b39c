"""Four-level atomic master equation: Hamiltonian, relaxation, steady state.

Level convention
----------------
Levels |1>..|4> map to array indices 0..3.  |1> and |3> are the two ground
hyperfine levels, |2> and |4> the two excited levels.  Three fields drive
the N-shaped topology

    omega_1 couples |1> <-> |2>   (detuning delta_1)
    omega_c couples |3> <-> |2>   (detuning delta_c)
    omega_2 couples |3> <-> |4>   (detuning delta_2)

In the rotating frame the Hamiltonian (units hbar = 1, all quantities
angular frequencies in rad/s) is

    H = delta_1 |2><2| + (delta_1 - delta_c) |3><3|
      + (delta_1 + delta_2 - delta_c) |4><4|
      - omega_1/2 (|1><2| + |2><1|)
      - omega_c/2 (|3><2| + |2><3|)
      - omega_2/2 (|3><4| + |4><3|)

Relaxation is phenomenological: population decay 2->1 (gamma_21), 2->3
(gamma_23) and 4->3 (gamma_43), plus coherence decay at the half-sums of
the total decay rates out of the two levels involved, with an extra knob
gamma_gg for the ground-ground coherence rho_13.

Density matrices are plain 4x4 complex ndarrays.  Superoperators act on
column-stacked matrices, vec(rho)[i + 4*j] = rho[i, j], and are 16x16
complex ndarrays.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DegenerateSteadyStateError,
    InvalidParameterError,
    SolveFailureError,
)

N_LEVELS = 4
DIM = N_LEVELS * N_LEVELS

# vec indices of the diagonal elements rho_11 .. rho_44
_DIAG = np.arange(N_LEVELS) * (N_LEVELS + 1)

# row vector extracting trace(rho) from vec(rho)
_TRACE_ROW = np.zeros(DIM, dtype=complex)
_TRACE_ROW[_DIAG] = 1.0

# tolerances pinned by the solver contract
RANK_TOL = 1e-9          # relative singular-value cutoff for the null space
RESIDUAL_TOL = 1e-10     # |L vec(rho)|_max <= RESIDUAL_TOL * |L|_max
HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10  # smallest admissible eigenvalue
MAX_STABLE_STEP = 0.1    # dt * |L|_max must not exceed this in evolve()


def _require_finite(name, value):
    if not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class LevelScheme:
    """Population decay rates of the four-level scheme, in rad/s.

    gamma_21, gamma_23 drain the excited state |2>, gamma_43 drains |4>.
    gamma_gg is a pure dephasing rate for the ground-ground coherence
    rho_13; it should stay small compared to gamma_21.
    """

    gamma_21: float
    gamma_23: float
    gamma_43: float
    gamma_gg: float = 0.0

    def __post_init__(self):
        for name in ("gamma_21", "gamma_23", "gamma_43", "gamma_gg"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value < 0.0:
                raise InvalidParameterError(f"{name} must be >= 0, got {value!r}")
        if self.gamma_gg > 0.1 * self.gamma_21:
            warnings.warn(
                "gamma_gg exceeds 0.1 * gamma_21; the ground-state coherence "
                "model is only meant as a weak correction",
                stacklevel=2,
            )

    def coherence_rates(self) -> np.ndarray:
        """4x4 symmetric matrix of off-diagonal decay rates gamma_ij.

        Zero on the diagonal (populations are handled separately).
        """
        g2 = self.gamma_21 + self.gamma_23   # total decay out of |2>
        g4 = self.gamma_43                   # total decay out of |4>
        # radiative part: gamma_ij is half the total population decay out of
        # the pair; |1> and |3> do not decay, so gamma_14 carries only
        # Gamma_43/2.  Anything larger is not a valid dissipator and drives
        # the smallest eigenvalue of the steady state negative under strong
        # fields.
        g = np.zeros((N_LEVELS, N_LEVELS))
        g[0, 1] = g[1, 0] = 0.5 * g2
        g[1, 2] = g[2, 1] = 0.5 * g2
        g[2, 3] = g[3, 2] = 0.5 * g4
        g[0, 3] = g[3, 0] = 0.5 * g4
        g[1, 3] = g[3, 1] = 0.5 * (g2 + g4)
        # ground-state dephasing as a proper dissipator sqrt(gg/2)(P1 - P3):
        # the 1-3 coherence decays at exactly gamma_gg, and every coherence
        # touching one of the two dephased levels picks up the mandatory
        # gamma_gg/4.  Bare gamma_13 damping alone is again not positive.
        quarter = 0.25 * self.gamma_gg
        for i, j in ((0, 1), (1, 2), (2, 3), (0, 3)):
            g[i, j] += quarter
            g[j, i] += quarter
        g[0, 2] = g[2, 0] = self.gamma_gg
        return g


@dataclass(frozen=True)
class DriveSet:
    """Rabi frequencies and detunings of the three driving fields (rad/s)."""

    omega_1: float
    omega_2: float
    omega_c: float
    delta_1: float = 0.0
    delta_2: float = 0.0
    delta_c: float = 0.0

    def __post_init__(self):
        for name in ("omega_1", "omega_2", "omega_c"):
            value = getattr(self, name)
            _require_finite(name, value)
            if value < 0.0:
                raise InvalidParameterError(
                    f"{name} must be >= 0 (Rabi frequency), got {value!r}"
                )
        for name in ("delta_1", "delta_2", "delta_c"):
            _require_finite(name, getattr(self, name))

    def shifted(self, d1=0.0, d2=0.0, dc=0.0) -> "DriveSet":
        """Copy with detunings displaced, e.g. by a Doppler shift."""
        return replace(
            self,
            delta_1=self.delta_1 + d1,
            delta_2=self.delta_2 + d2,
            delta_c=self.delta_c + dc,
        )


def build_hamiltonian(drives: DriveSet) -> np.ndarray:
    """Rotating-frame Hamiltonian of the driven four-level scheme."""
    h = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    h[1, 1] = drives.delta_1
    h[2, 2] = drives.delta_1 - drives.delta_c
    h[3, 3] = drives.delta_1 + drives.delta_2 - drives.delta_c
    h[0, 1] = h[1, 0] = -0.5 * drives.omega_1
    h[2, 1] = h[1, 2] = -0.5 * drives.omega_c
    h[2, 3] = h[3, 2] = -0.5 * drives.omega_2
    return h


def apply_relaxation(rho: np.ndarray, scheme: LevelScheme) -> np.ndarray:
    """Relaxation contribution R(rho) to d(rho)/dt, applied elementwise."""
    rho = np.asarray(rho, dtype=complex)
    out = -scheme.coherence_rates() * rho
    np.fill_diagonal(out, 0.0)
    g2 = scheme.gamma_21 + scheme.gamma_23
    out[0, 0] = scheme.gamma_21 * rho[1, 1]
    out[1, 1] = -g2 * rho[1, 1]
    out[2, 2] = scheme.gamma_23 * rho[1, 1] + scheme.gamma_43 * rho[3, 3]
    out[3, 3] = -scheme.gamma_43 * rho[3, 3]
    return out


def hamiltonian_superoperator(h: np.ndarray) -> np.ndarray:
    """Superoperator of -i[H, .] for column-stacked density matrices."""
    eye = np.eye(N_LEVELS)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def relaxation_superoperator(scheme: LevelScheme, coherence_rates=None) -> np.ndarray:
    """Superoperator of the relaxation map R.

    ``coherence_rates`` may override the off-diagonal rate matrix; the
    validation command uses this hook to demonstrate that a corrupted rate
    formula is caught by the analytic checks.
    """
    rates = scheme.coherence_rates() if coherence_rates is None else coherence_rates
    sup = np.zeros((DIM, DIM), dtype=complex)
    for i in range(N_LEVELS):
        for j in range(N_LEVELS):
            if i != j:
                idx = i + N_LEVELS * j
                sup[idx, idx] = -rates[i, j]
    g2 = scheme.gamma_21 + scheme.gamma_23
    d = _DIAG
    sup[d[0], d[1]] += scheme.gamma_21
    sup[d[1], d[1]] += -g2
    sup[d[2], d[1]] += scheme.gamma_23
    sup[d[2], d[3]] += scheme.gamma_43
    sup[d[3], d[3]] += -scheme.gamma_43
    return sup


def build_liouvillian(drives: DriveSet, scheme: LevelScheme) -> np.ndarray:
    """16x16 generator L with d vec(rho)/dt = L vec(rho)."""
    return hamiltonian_superoperator(build_hamiltonian(drives)) + relaxation_superoperator(scheme)


def liouvillian_trace_residual(liouvillian: np.ndarray) -> float:
    """Max-abs violation of trace preservation, |tr . L|_max.

    Zero (to roundoff) for any generator assembled by this module.
    """
    return float(np.max(np.abs(_TRACE_ROW @ liouvillian)))


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a 4x4 matrix into a length-16 vector."""
    return np.asarray(rho, dtype=complex).reshape(DIM, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v, dtype=complex).reshape((N_LEVELS, N_LEVELS), order="F")


def density_matrix_residuals(rho: np.ndarray) -> dict:
    """Hermiticity, trace and positivity residuals of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    trace = abs(rho.trace() - 1.0)
    eigmin = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    return {"hermiticity": herm, "trace": float(trace), "eig_min": eigmin}


def _diag_indices(n_levels):
    return np.arange(n_levels) * (n_levels + 1)


def _trace_row(n_levels):
    row = np.zeros(n_levels * n_levels, dtype=complex)
    row[_diag_indices(n_levels)] = 1.0
    return row


def _rank_deficiency(liouvillian: np.ndarray) -> int:
    s = np.linalg.svd(liouvillian, compute_uv=False)
    if s[0] == 0.0:
        return liouvillian.shape[0]
    return int(np.sum(s <= RANK_TOL * s[0]))


def _finalize_steady_state(liouvillian, raw_vec, scale, n_levels):
    rho = raw_vec.reshape((n_levels, n_levels), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    trace = rho.trace().real
    if not math.isfinite(trace) or abs(trace) < 1e-6:
        return None, math.inf, "solve produced a near-traceless solution"
    rho /= trace
    residual = float(np.max(np.abs(liouvillian @ rho.reshape(-1, order="F"))))
    if residual > RESIDUAL_TOL * scale:
        return None, residual, None
    eigmin = float(np.linalg.eigvalsh(rho).min())
    if eigmin < POSITIVITY_TOL:
        return None, residual, (
            f"steady state has eigenvalue {eigmin:.3e} below tolerance; "
            "the relaxation model does not admit a positive state here"
        )
    return rho, residual, None


def _solve_steady(liouvillian: np.ndarray, n_levels: int) -> np.ndarray:
    deficiency = _rank_deficiency(liouvillian)
    if deficiency > 1:
        raise DegenerateSteadyStateError(
            f"Liouvillian null space has dimension {deficiency}; the drive "
            "topology leaves disconnected stationary states"
        )
    if deficiency == 0:
        raise SolveFailureError(
            "Liouvillian has no null vector at the working tolerance; "
            "it does not preserve the trace"
        )
    scale = float(np.max(np.abs(liouvillian)))
    # scaled to |L|_max so the constraint row does not wreck the row scaling
    # of an otherwise huge system (detunings can sit 10 decades above 1)
    trace_row = _trace_row(n_levels) * scale
    dim = n_levels * n_levels
    last_residual = np.inf
    last_reason = None
    # drop one population equation (they are linearly dependent through
    # trace preservation) and insert the trace constraint in its place;
    # fall through the other choices in case one leaves a singular or badly
    # conditioned system
    for row in _diag_indices(n_levels):
        a = liouvillian.copy()
        a[row] = trace_row
        rhs = np.zeros(dim, dtype=complex)
        rhs[row] = scale
        try:
            x = np.linalg.solve(a, rhs)
            # one refinement pass keeps the forward error near roundoff even
            # when the rate matrix spans many decades
            x += np.linalg.solve(a, rhs - a @ x)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)):
            continue
        rho, residual, reason = _finalize_steady_state(liouvillian, x, scale, n_levels)
        if rho is not None:
            return rho
        last_residual = min(last_residual, residual)
        if reason is not None:
            last_reason = reason
    if last_reason is not None:
        raise SolveFailureError(last_reason)
    raise SolveFailureError(
        f"steady-state residual {last_residual:.3e} exceeds "
        f"{RESIDUAL_TOL:.1e} * |L|_max = {RESIDUAL_TOL * scale:.3e}"
    )


def steady_state(liouvillian: np.ndarray) -> np.ndarray:
    """Unique steady state of a trace-preserving 16x16 generator.

    One population equation is replaced by the trace constraint and the
    resulting dense complex system is solved with partial pivoting, with one
    round of iterative refinement.  Raises DegenerateSteadyStateError when
    the null space of L has dimension above one and SolveFailureError when
    no adequate solution is found.
    """
    liouvillian = np.asarray(liouvillian, dtype=complex)
    if liouvillian.shape != (DIM, DIM):
        raise InvalidParameterError(
            f"expected a {DIM}x{DIM} superoperator, got shape {liouvillian.shape}"
        )
    return _solve_steady(liouvillian, N_LEVELS)


def active_levels(drives: DriveSet, scheme: LevelScheme) -> list:
    """Levels reachable from the driven ones through drives and decays.

    Returns sorted 0-based indices.  Population prepared on these levels can
    never leak outside the set, so the master equation closes on it exactly.
    """
    edges = [[] for _ in range(N_LEVELS)]
    seeds = set()
    for omega, (i, j) in (
        (drives.omega_1, (0, 1)),
        (drives.omega_c, (1, 2)),
        (drives.omega_2, (2, 3)),
    ):
        if omega > 0.0:
            edges[i].append(j)
            edges[j].append(i)
            seeds.update((i, j))
    for rate, (i, j) in (
        (scheme.gamma_21, (1, 0)),
        (scheme.gamma_23, (1, 2)),
        (scheme.gamma_43, (3, 2)),
    ):
        if rate > 0.0:
            edges[i].append(j)
    reached = set()
    stack = list(seeds)
    while stack:
        level = stack.pop()
        if level in reached:
            continue
        reached.add(level)
        stack.extend(edges[level])
    return sorted(reached)


def _block_indices(levels):
    """vec indices of the matrix elements with both level indices in the set."""
    levels = np.asarray(levels)
    return (levels[None, :] * N_LEVELS + levels[:, None]).reshape(-1, order="F")


def driven_steady_state(drives: DriveSet, scheme: LevelScheme) -> np.ndarray:
    """Steady state with all population prepared on the driven level set.

    Levels that no field touches and that no decay chain from the driven
    set feeds are held at zero population; the dynamics closes exactly on
    the remaining block, which is solved like :func:`steady_state`.  This is
    the preparation the vapor response model assumes (every atom interacts
    with the beams).  Raises DegenerateSteadyStateError when no field is on
    or when the driven block itself still splits into disconnected parts.
    """
    active = active_levels(drives, scheme)
    if not active:
        raise DegenerateSteadyStateError(
            "no field is on; every population distribution is stationary"
        )
    liouvillian = build_liouvillian(drives, scheme)
    if len(active) == N_LEVELS:
        return _solve_steady(liouvillian, N_LEVELS)
    idx = _block_indices(active)
    sub = liouvillian[np.ix_(idx, idx)]
    rho_sub = _solve_steady(sub, len(active))
    rho = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    rho[np.ix_(active, active)] = rho_sub
    return rho


def steady_state_batch(liouvillians: np.ndarray, n_levels: int = N_LEVELS) -> np.ndarray:
    """Steady states of a stack of generators, (n, d*d, d*d) -> (n, d, d).

    Fast path for velocity averaging: one batched LAPACK solve plus a
    refinement pass, then residual, Hermiticity and positivity checks.  Any
    node failing the checks is retried through the careful scalar path,
    which raises the appropriate error.
    """
    batch = np.asarray(liouvillians, dtype=complex)
    n = batch.shape[0]
    dim = n_levels * n_levels
    scale = np.max(np.abs(batch), axis=(1, 2))
    # constraint row scaled per node, as in the scalar path
    trace_row = _trace_row(n_levels)
    a = batch.copy()
    a[:, 0, :] = trace_row[None, :] * scale[:, None]
    rhs = np.zeros((n, dim), dtype=complex)
    rhs[:, 0] = scale
    try:
        x = np.linalg.solve(a, rhs[..., None])[..., 0]
        x += np.linalg.solve(a, (rhs - np.einsum("nij,nj->ni", a, x))[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.stack([_solve_steady(batch[i], n_levels) for i in range(n)])

    rho = x.reshape(n, n_levels, n_levels).transpose(0, 2, 1)  # unvec, column order
    rho = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
    traces = np.einsum("nii->n", rho).real
    ok = np.isfinite(traces) & (np.abs(traces) > 1e-6)
    rho[ok] /= traces[ok, None, None]

    resid = np.max(
        np.abs(np.einsum("nij,nj->ni", batch, rho.transpose(0, 2, 1).reshape(n, dim))),
        axis=1,
    )
    ok &= resid <= RESIDUAL_TOL * scale
    finite = np.isfinite(rho).all(axis=(1, 2))
    ok &= finite
    safe = np.where(finite[:, None, None], rho, (np.eye(n_levels) / n_levels)[None])
    eigmin = np.linalg.eigvalsh(safe).min(axis=1)
    ok &= eigmin >= POSITIVITY_TOL
    if not np.all(ok):
        rho = rho.copy()
        for i in np.flatnonzero(~ok):
            rho[i] = _solve_steady(batch[i], n_levels)
    return rho


def evolve(
    drives: DriveSet,
    scheme: LevelScheme,
    rho0: np.ndarray,
    t_final: float,
    dt: float,
) -> np.ndarray:
    """Integrate d vec(rho)/dt = L vec(rho) with fixed-step classical RK4.

    Serves as the independent time-domain oracle for the steady-state
    solver.  The step must satisfy dt * |L|_max <= 0.1; the total time
    integrated is ceil(t_final / dt) * dt.
    """
    if not (math.isfinite(t_final) and t_final >= 0.0):
        raise InvalidParameterError(f"t_final must be >= 0, got {t_final!r}")
    if not (math.isfinite(dt) and dt > 0.0):
        raise InvalidParameterError(f"dt must be > 0, got {dt!r}")
    liouvillian = build_liouvillian(drives, scheme)
    scale = float(np.max(np.abs(liouvillian)))
    if dt * scale > MAX_STABLE_STEP * (1.0 + 1e-12):
        raise InvalidParameterError(
            f"dt * |L|_max = {dt * scale:.3e} exceeds the stability bound "
            f"{MAX_STABLE_STEP}"
        )
    y = vec(rho0)
    n_steps = int(math.ceil(t_final / dt - 1e-12))
    for _ in range(n_steps):
        k1 = liouvillian @ y
        k2 = liouvillian @ (y + 0.5 * dt * k1)
        k3 = liouvillian @ (y + 0.5 * dt * k2)
        k4 = liouvillian @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return unvec(y)
