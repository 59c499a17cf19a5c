"""Lindblad generator assembly, adjoint action, time integration, steady states.

The generator is applied matrix-free (a handful of dense matmuls per
evaluation) instead of assembling the dim^2 x dim^2 superoperator. Time
integration is an embedded Dormand-Prince 4(5) stepper; after every
accepted step the density matrix is symmetrized and trace-renormalized,
with the applied corrections logged in the trajectory diagnostics. Steady
states come from damped long-time integration with geometric time
doubling, which naturally selects the basin image of the initial guess
when the steady space is degenerate.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    InvalidParameterError,
    InvariantBreachError,
    NonConvergenceError,
    ShapeMismatchError,
    StiffFailureError,
    UnsupportedError,
)
from .fock import (
    FockOperator,
    InteriorProjector,
    build_ladder,
    build_quadratures,
    build_two_dissipators,
    channel_adjoint_term,
    spectral_function,
)
from .states import LogicalFrame, QuantumState


@dataclass(frozen=True)
class LindbladModel:
    """Ordered jump operators with non-negative rates; purely dissipative."""

    dim: int
    jumps: tuple
    hamiltonian: FockOperator = None
    _scaled: tuple = field(init=False, repr=False, compare=False, default=None)
    _kmat: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.hamiltonian is not None:
            raise UnsupportedError("coherent (Hamiltonian) terms are out of scope")
        jumps = tuple((op, float(rate)) for op, rate in self.jumps)
        for op, rate in jumps:
            if not isinstance(op, FockOperator):
                raise InvalidParameterError("jumps must be (FockOperator, rate) pairs")
            if op.dim != self.dim:
                raise ShapeMismatchError(
                    f"jump dim {op.dim} != model dim {self.dim}"
                )
            if rate < 0:
                raise InvalidParameterError(f"rates must be >= 0, got {rate}")
        object.__setattr__(self, "jumps", jumps)
        scaled = tuple(
            np.sqrt(rate) * op.entries for op, rate in jumps if rate > 0
        )
        kmat = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for m in scaled:
            kmat += m.conj().T @ m
        kmat = 0.5 * (kmat + kmat.conj().T)
        object.__setattr__(self, "_scaled", scaled)
        object.__setattr__(self, "_kmat", kmat)

    def rhs(self, rho):
        """Generator action on a raw density matrix array."""
        out = -0.5 * (self._kmat @ rho + rho @ self._kmat)
        for m in self._scaled:
            out += m @ rho @ m.conj().T
        return out


def two_dissipator_model(dim, eta, epsilon, kappa=0.0):
    """Grid stabilization model: unit-rate M1, M2 plus optional photon loss."""
    m1, m2 = build_two_dissipators(dim, eta, epsilon)
    jumps = [(m1, 1.0), (m2, 1.0)]
    if kappa < 0:
        raise InvalidParameterError(f"kappa must be >= 0, got {kappa}")
    if kappa > 0:
        jumps.append((build_ladder(dim), kappa))
    return LindbladModel(dim=dim, jumps=tuple(jumps))


def loss_model(dim, kappa):
    """Photon loss only."""
    if kappa <= 0:
        raise InvalidParameterError(f"kappa must be > 0, got {kappa}")
    return LindbladModel(dim=dim, jumps=((build_ladder(dim), kappa),))


def apply_generator(model, rho):
    """Schroedinger-picture generator as a Hermitian traceless operator."""
    if isinstance(rho, QuantumState):
        if rho.dim != model.dim:
            raise ShapeMismatchError(f"state dim {rho.dim} != model dim {model.dim}")
        mat = rho.density()
    else:
        mat = np.asarray(rho, dtype=np.complex128)
        if mat.shape != (model.dim, model.dim):
            raise ShapeMismatchError(
                f"matrix shape {mat.shape} != ({model.dim}, {model.dim})"
            )
    out = model.rhs(mat)
    out = 0.5 * (out + out.conj().T)
    return FockOperator(model.dim, out, hermitian=True)


def apply_adjoint(model, observable):
    """Heisenberg-picture generator: sum of per-channel adjoint terms."""
    if not isinstance(observable, FockOperator):
        raise ContractViolationError("apply_adjoint expects a FockOperator")
    if observable.dim != model.dim:
        raise ShapeMismatchError(
            f"observable dim {observable.dim} != model dim {model.dim}"
        )
    out = np.zeros((model.dim, model.dim), dtype=np.complex128)
    for op, rate in model.jumps:
        if rate > 0:
            out += rate * channel_adjoint_term(op, observable).entries
    out = 0.5 * (out + out.conj().T)
    return FockOperator(model.dim, out, hermitian=True)


@dataclass(frozen=True)
class ToleranceSpec:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 2_000_000


@dataclass(frozen=True)
class RecordSpec:
    """What to evaluate along the trajectory.

    n_points uniform recording times including both endpoints; the logical
    frame adds Z/X/Y series, the pure target adds the fidelity series, and
    extra named Hermitian observables are appended to the table.
    """

    n_points: int = 201
    frame: LogicalFrame = None
    target: QuantumState = None
    extra: tuple = ()  # pairs (name, FockOperator)
    snapshot_times: tuple = ()
    check_positivity: bool = True


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    observables: dict
    diagnostics: dict
    final_state: QuantumState
    snapshots: tuple = ()


# Dormand-Prince 4(5) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_DP_E = _DP_B5 - _DP_B4

_TRACE_ABORT = 1e-4
_POSITIVITY_ABORT = -1e-4
_MIN_STEP_REL = 1e-14


def _observe(rho, record, number_diag, target_vec, extra_ops):
    row = {
        "N": float(np.real(np.sum(np.diagonal(rho) * number_diag))),
        "purity": float(np.real(np.sum(rho * rho.conj().T))),
    }
    if record.frame is not None:
        for name, op in (
            ("Z", record.frame.Z),
            ("X", record.frame.X),
            ("Y", record.frame.Y),
        ):
            row[name] = float(np.real(np.einsum("ij,ji->", rho, op.entries)))
    else:
        row["Z"] = row["X"] = row["Y"] = float("nan")
    if target_vec is not None:
        row["fidelity"] = float(np.real(target_vec.conj() @ rho @ target_vec))
    else:
        row["fidelity"] = float("nan")
    for name, entries in extra_ops:
        row[name] = float(np.real(np.einsum("ij,ji->", rho, entries)))
    return row


def integrate(model, rho0, t_final, solver=None, record=None):
    """Adaptive integration of d(rho)/dt = L(rho) with invariant repair.

    Embedded 4(5) error control at the requested rtol/atol; every accepted
    step symmetrizes and trace-renormalizes the state, logging the applied
    corrections. Observables are evaluated on a uniform recording grid by
    stepping exactly onto the record times. Step-size underflow raises a
    stiff-failure error with the last valid time; an invariant breach
    beyond 1e-4 aborts with diagnostics.
    """
    solver = solver or ToleranceSpec()
    record = record or RecordSpec()
    if not isinstance(rho0, QuantumState):
        raise InvalidParameterError("rho0 must be a QuantumState")
    if rho0.dim != model.dim:
        raise ShapeMismatchError(f"state dim {rho0.dim} != model dim {model.dim}")
    if t_final < 0:
        raise InvalidParameterError(f"t_final must be >= 0, got {t_final}")
    if record.target is not None and record.target.kind != "pure":
        raise UnsupportedError("fidelity recording needs a pure target")

    dim = model.dim
    number_diag = np.arange(dim, dtype=np.float64)
    target_vec = record.target.data if record.target is not None else None
    extra_ops = tuple(
        (name, op.entries if isinstance(op, FockOperator) else np.asarray(op))
        for name, op in record.extra
    )

    rho = rho0.density().astype(np.complex128, copy=True)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.real(np.trace(rho))

    n_points = max(2, int(record.n_points)) if t_final > 0 else 1
    times = np.linspace(0.0, t_final, n_points)
    rows = []
    min_eigs = []
    snapshots = []
    snapshot_times = sorted(set(float(t) for t in record.snapshot_times))

    def take_record(t_now, mat):
        rows.append(_observe(mat, record, number_diag, target_vec, extra_ops))
        if record.check_positivity:
            min_eigs.append(float(np.linalg.eigvalsh(mat)[0]))
            if min_eigs[-1] < _POSITIVITY_ABORT:
                raise InvariantBreachError(
                    f"min eigenvalue {min_eigs[-1]:.3e} below {_POSITIVITY_ABORT} "
                    f"at t={t_now:.6g}",
                    diagnostics={"time": t_now, "min_eigenvalue": min_eigs[-1]},
                )
        else:
            min_eigs.append(float("nan"))

    take_record(0.0, rho)
    if t_final == 0:
        observables = {key: np.array([row[key] for row in rows]) for key in rows[0]}
        diagnostics = {
            "step_times": np.array([]),
            "step_sizes": np.array([]),
            "trace_drift": np.array([]),
            "hermiticity_defect": np.array([]),
            "min_eigenvalue": np.array(min_eigs),
            "n_steps": 0,
            "n_rhs": 0,
            "max_trace_drift_per_unit_time": 0.0,
        }
        return TrajectoryRecord(
            times=times,
            observables=observables,
            diagnostics=diagnostics,
            final_state=QuantumState.mixed(rho),
            snapshots=(),
        )

    step_times = []
    step_sizes = []
    drift_log = []
    herm_log = []
    n_rhs = 0

    t = 0.0
    rec_idx = 1
    snap_idx = 0
    k_stages = [None] * 7
    k_stages[0] = model.rhs(rho)
    n_rhs += 1
    # initial step from the RHS scale
    scale = solver.atol + solver.rtol * np.max(np.abs(rho))
    rhs_norm = np.max(np.abs(k_stages[0]))
    h = min(0.1 * scale / max(rhs_norm, 1e-30), t_final) if rhs_norm > 0 else t_final
    h = max(min(h, t_final), t_final * _MIN_STEP_REL * 10)

    for _ in range(solver.max_steps):
        if t >= t_final - 1e-12 * t_final:
            break
        # step exactly onto the next boundary (record or snapshot time)
        boundary = times[rec_idx] if rec_idx < n_points else t_final
        while snap_idx < len(snapshot_times) and snapshot_times[snap_idx] <= t + 1e-12:
            snap_idx += 1
        if snap_idx < len(snapshot_times):
            boundary = min(boundary, snapshot_times[snap_idx])
        h = min(h, boundary - t)
        if h < _MIN_STEP_REL * max(t, 1.0):
            raise StiffFailureError(
                f"step size underflow at t={t:.6g} (h={h:.3e})", last_time=t
            )
        for stage in range(1, 7):
            y = rho
            if _DP_A[stage].size:
                y = rho + h * sum(
                    a * k for a, k in zip(_DP_A[stage], k_stages[:stage]) if a != 0.0
                )
            k_stages[stage] = model.rhs(y)
        n_rhs += 6
        increment = h * sum(b * k for b, k in zip(_DP_B5, k_stages) if b != 0.0)
        rho_new = rho + increment
        err_mat = h * sum(e * k for e, k in zip(_DP_E, k_stages) if e != 0.0)
        weight = solver.atol + solver.rtol * np.maximum(np.abs(rho), np.abs(rho_new))
        err_norm = float(np.sqrt(np.mean(np.abs(err_mat / weight) ** 2)))
        if err_norm <= 1.0:
            t_new = t + h
            # invariant repair: symmetrize, renormalize; corrections logged
            herm_defect = float(np.max(np.abs(rho_new - rho_new.conj().T)))
            rho_new = 0.5 * (rho_new + rho_new.conj().T)
            tr = float(np.real(np.trace(rho_new)))
            drift = tr - 1.0
            if abs(drift) > _TRACE_ABORT:
                raise InvariantBreachError(
                    f"trace drift {drift:.3e} beyond {_TRACE_ABORT} at t={t_new:.6g}",
                    diagnostics={"time": t_new, "trace": tr},
                )
            rho_new /= tr
            step_times.append(t_new)
            step_sizes.append(h)
            drift_log.append(drift)
            herm_log.append(herm_defect)
            rho = rho_new
            t = t_new
            k_stages[0] = model.rhs(rho)  # first-same-as-last, recomputed post-repair
            n_rhs += 1
            while snap_idx < len(snapshot_times) and (
                abs(t - snapshot_times[snap_idx]) <= 1e-9 * max(1.0, t_final)
            ):
                snapshots.append((snapshot_times[snap_idx], QuantumState.mixed(rho)))
                snap_idx += 1
            while rec_idx < n_points and (
                abs(t - times[rec_idx]) <= 1e-9 * max(1.0, t_final)
            ):
                take_record(t, rho)
                rec_idx += 1
        factor = 0.9 * err_norm ** -0.2 if err_norm > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
    else:
        raise StiffFailureError(
            f"max step count {solver.max_steps} exhausted at t={t:.6g}", last_time=t
        )
    while rec_idx < n_points:  # numerical shortfall at the last boundary
        take_record(times[rec_idx], rho)
        rec_idx += 1

    observables = {key: np.array([row[key] for row in rows]) for key in rows[0]}
    elapsed = max(t_final, 1e-30)
    diagnostics = {
        "step_times": np.array(step_times),
        "step_sizes": np.array(step_sizes),
        "trace_drift": np.array(drift_log),
        "hermiticity_defect": np.array(herm_log),
        "min_eigenvalue": np.array(min_eigs),
        "n_steps": len(step_times),
        "n_rhs": n_rhs,
        "max_trace_drift_per_unit_time": float(np.sum(np.abs(drift_log))) / elapsed,
    }
    return TrajectoryRecord(
        times=times,
        observables=observables,
        diagnostics=diagnostics,
        final_state=QuantumState.mixed(rho),
        snapshots=tuple(snapshots),
    )


@dataclass(frozen=True)
class SteadyStateResult:
    state: QuantumState
    residual: float
    elapsed: float
    blocks: int


def steady_state(model, rho_guess, tol=1e-7, t_block=8.0, max_doublings=12, solver=None):
    """Damped long-time integration until ||L(rho)||_F <= tol * ||rho||_F.

    Integration blocks double geometrically; a residual plateau above the
    tolerance raises a non-convergence error carrying the best state.
    """
    solver = solver or ToleranceSpec()
    state = rho_guess
    elapsed = 0.0
    best = None
    previous = np.inf
    for block in range(max_doublings):
        rec = integrate(
            model,
            state,
            t_block,
            solver=solver,
            record=RecordSpec(n_points=2, check_positivity=False),
        )
        state = rec.final_state
        elapsed += t_block
        rho = state.density()
        residual = float(np.linalg.norm(model.rhs(rho))) / float(np.linalg.norm(rho))
        if best is None or residual < best[1]:
            best = (state, residual)
        if residual <= tol:
            return SteadyStateResult(
                state=state, residual=residual, elapsed=elapsed, blocks=block + 1
            )
        if residual > 0.98 * previous and block >= 3:
            raise NonConvergenceError(
                f"steady-state residual plateaued at {residual:.3e} "
                f"(tolerance {tol:.0e}) after t={elapsed:.6g}",
                best_state=best[0],
                residual=best[1],
            )
        previous = residual
        t_block *= 2.0
    raise NonConvergenceError(
        f"steady-state residual {best[1]:.3e} above tolerance {tol:.0e} "
        f"after {max_doublings} doublings (t={elapsed:.6g})",
        best_state=best[0],
        residual=best[1],
    )


def adjoint_duality_residual(model, n_pairs=10, seed=7):
    """Max relative defect of tr(L*(O) rho) = tr(O L(rho)) on random pairs."""
    rng = np.random.default_rng(seed)
    dim = model.dim
    worst = 0.0
    for _ in range(n_pairs):
        raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        obs = FockOperator(dim, 0.5 * (raw + raw.conj().T), hermitian=True)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = g @ g.conj().T
        rho /= np.real(np.trace(rho))
        lhs = np.einsum("ij,ji->", apply_adjoint(model, obs).entries, rho)
        rhs = np.einsum("ij,ji->", obs.entries, model.rhs(rho))
        scale = max(abs(lhs), abs(rhs), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return float(worst)


def _periodic_pieces(dim, eta):
    """Spectral building blocks sin(2 eta q), cos(2 eta q), cos^2(eta q)."""
    q, _ = build_quadratures(dim)
    sin2 = spectral_function(q, lambda lam: np.sin(2.0 * eta * lam))
    cos2 = spectral_function(q, lambda lam: np.cos(2.0 * eta * lam))
    csq = spectral_function(q, lambda lam: np.cos(eta * lam) ** 2)
    return q, sin2, cos2, csq


def periodic_adjoint_residual(dim, eta, epsilon, f="cos", c1=None, c2=None, cutoff=None):
    """Interior residual of the drift-diffusion form of L* on f(2 eta q).

    The Heisenberg action of the two-dissipator model on O_f = f(2 eta q)
    reduces (for 2 eta^2 in 2 pi Z) to

        L*(O_f) = c1 * sin(2 eta q) f'(2 eta q) + c2 * cos^2(eta q) f''(2 eta q)

    with the literal operator ordering giving c1 = -(eps + eps^2 eta) * eta
    and c2 = 2 eps^2 eta^2 (the defaults). Pass c1/c2 to test other
    coefficient claims. Products of truncated periodic operators carry a
    truncation boundary layer of width ~ 2 eta sqrt(2 dim) Fock levels, so
    the default interior cutoff here is dim//2 rather than the single-
    operator default 0.8*dim.
    """
    if f not in ("cos", "sin"):
        raise InvalidParameterError(f"f must be 'cos' or 'sin', got {f!r}")
    if c1 is None:
        c1 = -(epsilon + epsilon**2 * eta) * eta
    if c2 is None:
        c2 = 2.0 * epsilon**2 * eta**2
    cutoff = cutoff if cutoff is not None else dim // 2
    interior = InteriorProjector(dim, cutoff)
    model = two_dissipator_model(dim, eta, epsilon)
    q, sin2, cos2, csq = _periodic_pieces(dim, eta)
    if f == "cos":
        obs = cos2
        fp = FockOperator(dim, -sin2.entries, hermitian=True)
        fpp = FockOperator(dim, -cos2.entries, hermitian=True)
    else:
        obs = sin2
        fp = cos2
        fpp = FockOperator(dim, -sin2.entries, hermitian=True)
    lhs = apply_adjoint(model, obs).entries
    rhs = c1 * (sin2.entries @ fp.entries) + c2 * (csq.entries @ fpp.entries)
    rhs = 0.5 * (rhs + rhs.conj().T)
    residual = interior.max_norm(lhs - rhs)
    return {
        "residual": float(residual),
        "cutoff": cutoff,
        "c1": float(c1),
        "c2": float(c2),
        "f": f,
    }


def stabilizer_commutator_norm(dim, eta, epsilon, f="cos", cutoff=None):
    """Interior max norm of [M2, f(2 eta q)].

    Exactly zero in the untruncated algebra when 2 eta^2 is a multiple of
    2 pi; the truncated product needs the boundary-layer interior cutoff
    dim//2 (see periodic_adjoint_residual).
    """
    if f not in ("cos", "sin"):
        raise InvalidParameterError(f"f must be 'cos' or 'sin', got {f!r}")
    cutoff = cutoff if cutoff is not None else dim // 2
    interior = InteriorProjector(dim, cutoff)
    _, m2 = build_two_dissipators(dim, eta, epsilon)
    q, _ = build_quadratures(dim)
    func = np.sin if f == "sin" else np.cos
    obs = spectral_function(q, lambda lam: func(2.0 * eta * lam))
    comm = m2.entries @ obs.entries - obs.entries @ m2.entries
    return float(interior.max_norm(comm))
