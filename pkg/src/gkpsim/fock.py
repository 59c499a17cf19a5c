"""Truncated harmonic-oscillator operator algebra.

Dense complex matrices on an N_F-dimensional Fock space: ladder and
quadrature operators, spectral functions of Hermitian operators (sin, cos,
sign, exp, ...), the two- and four-dissipator jump operators of the grid
stabilization scheme, and the adjoint (Heisenberg) action of a single
dissipation channel.

Everything is dense: periodic functions such as sin(eta*q) are full
matrices in the Fock basis, so sparse formats buy nothing at dim <= 300.
Operators are immutable after construction and safe to share across
workers.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    InvalidDimensionError,
    InvalidParameterError,
    ShapeMismatchError,
)

# Relative tolerance of the hermiticity tag check.
_HERM_RTOL = 1e-12


def _as_locked_complex(entries):
    out = np.array(entries, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on the truncated Fock space.

    The ``hermitian`` tag is verified at construction, never assumed:
    max |entries - entries^dag| must stay below 1e-12 * max |entries|.
    """

    dim: int
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        if self.dim <= 0:
            raise InvalidDimensionError(f"dim must be positive, got {self.dim}")
        entries = _as_locked_complex(self.entries)
        if entries.shape != (self.dim, self.dim):
            raise ShapeMismatchError(
                f"entries shape {entries.shape} != ({self.dim}, {self.dim})"
            )
        object.__setattr__(self, "entries", entries)
        if self.hermitian:
            scale = np.max(np.abs(entries))
            dev = np.max(np.abs(entries - entries.conj().T))
            if scale > 0 and dev > _HERM_RTOL * scale:
                raise ContractViolationError(
                    f"hermitian tag violated: max |A - A^dag| = {dev:.3e} "
                    f"> {_HERM_RTOL:.0e} * max|A| = {_HERM_RTOL * scale:.3e}"
                )

    def dagger(self):
        return FockOperator(self.dim, self.entries.conj().T, hermitian=self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            if other.dim != self.dim:
                raise ShapeMismatchError(
                    f"operator dims differ: {self.dim} vs {other.dim}"
                )
            return FockOperator(self.dim, self.entries @ other.entries)
        return NotImplemented


@dataclass(frozen=True)
class InteriorProjector:
    """Projector onto the interior Fock levels 0 .. cutoff-1.

    Identity checks on truncated operators are only meaningful away from
    the truncation edge; this type isolates that boundary layer.
    """

    dim: int
    cutoff: int

    def __post_init__(self):
        if not (0 < self.cutoff < self.dim):
            raise InvalidParameterError(
                f"cutoff must satisfy 0 < cutoff < dim, got cutoff={self.cutoff}, "
                f"dim={self.dim}"
            )

    def block(self, entries):
        """Leading cutoff x cutoff block (the compression P A P restricted)."""
        entries = np.asarray(entries)
        if entries.shape != (self.dim, self.dim):
            raise ShapeMismatchError(
                f"entries shape {entries.shape} != ({self.dim}, {self.dim})"
            )
        return entries[: self.cutoff, : self.cutoff]

    def max_norm(self, entries):
        """Max-entry norm of the interior block."""
        return float(np.max(np.abs(self.block(entries))))


def default_interior(dim, fraction=0.8):
    """Interior projector at the default 0.8*dim truncation-artifact boundary."""
    cutoff = max(1, min(dim - 1, int(fraction * dim)))
    return InteriorProjector(dim, cutoff)


def build_ladder(dim):
    """Annihilation operator a with a[n-1, n] = sqrt(n)."""
    if dim is None or dim < 1:
        raise InvalidDimensionError(f"dim must be >= 1, got {dim}")
    entries = np.zeros((dim, dim), dtype=np.complex128)
    n = np.arange(1, dim)
    entries[n - 1, n] = np.sqrt(n)
    return FockOperator(dim, entries, hermitian=False)


def build_number(dim):
    """Number operator N = a^dag a (diagonal 0, 1, ..., dim-1)."""
    if dim is None or dim < 1:
        raise InvalidDimensionError(f"dim must be >= 1, got {dim}")
    return FockOperator(dim, np.diag(np.arange(dim, dtype=np.complex128)), hermitian=True)


def build_quadratures(dim):
    """Position and momentum: q = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)).

    Both Hermitian; [q, p] = i holds on the interior, with the expected
    -i*(dim-1) artifact in the last diagonal entry.
    """
    if dim is None or dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2 for quadratures, got {dim}")
    a = build_ladder(dim).entries
    adag = a.conj().T
    q = (a + adag) / np.sqrt(2.0)
    p = (a - adag) / (1j * np.sqrt(2.0))
    return (
        FockOperator(dim, q, hermitian=True),
        FockOperator(dim, p, hermitian=True),
    )


def spectral_function(op, f):
    """Apply a scalar function to a Hermitian operator through its eigenbasis.

    op = U diag(lam) U^dag  ->  U diag(f(lam)) U^dag. The result is tagged
    hermitian when f maps the (real) spectrum to real values. One
    eigendecomposition serves every function of the same operator, and
    algebraic identities of f survive exactly in the shared eigenbasis.
    """
    if not isinstance(op, FockOperator):
        raise ContractViolationError("spectral_function expects a FockOperator")
    if not op.hermitian:
        raise ContractViolationError(
            "spectral_function requires an operator tagged (and verified) hermitian"
        )
    lam, basis = np.linalg.eigh(op.entries)
    values = np.asarray(f(lam))
    if values.shape != lam.shape:
        raise ContractViolationError(
            "scalar function must map the spectrum elementwise"
        )
    real_valued = bool(np.isrealobj(values))
    out = (basis * values[np.newaxis, :]) @ basis.conj().T
    if real_valued:
        # exact symmetrization removes matmul rounding asymmetry
        out = 0.5 * (out + out.conj().T)
    return FockOperator(op.dim, out, hermitian=real_valued)


def _trig_pair(quad, eta):
    """sin(eta*x) and cos(eta*x) of a quadrature from one eigendecomposition."""
    lam, basis = np.linalg.eigh(quad.entries)
    s = (basis * np.sin(eta * lam)) @ basis.conj().T
    c = (basis * np.cos(eta * lam)) @ basis.conj().T
    s = 0.5 * (s + s.conj().T)
    c = 0.5 * (c + c.conj().T)
    return s, c


def build_two_dissipators(dim, eta, epsilon):
    """Jump operators of the two-dissipator grid stabilization.

        M1 = sin(eta q) + i eps cos(eta q) p
        M2 = sin(eta p) - i eps cos(eta p) q

    The trig factor multiplies the quadrature from the left; the ordering
    matters at O(eps) and is part of the contract. Neither is Hermitian.
    """
    if dim is None or dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    if eta is None or eta <= 0:
        raise InvalidParameterError(f"eta must be > 0, got {eta}")
    if epsilon is None or epsilon <= 0:
        raise InvalidParameterError(f"epsilon must be > 0, got {epsilon}")
    q, p = build_quadratures(dim)
    sq, cq = _trig_pair(q, eta)
    sp, cp = _trig_pair(p, eta)
    m1 = sq + 1j * epsilon * (cq @ p.entries)
    m2 = sp - 1j * epsilon * (cp @ q.entries)
    return FockOperator(dim, m1), FockOperator(dim, m2)


def build_four_dissipators(dim, eta_square, epsilon):
    """Four-dissipator baseline jump operators at lattice constant eta_square.

        L1 = sin(es q) + i eps cos(es q) p
        L2 = sin(es p) - i eps cos(es p) q
        L3 = cos(es q) - i eps sin(es q) p - exp(eps*es/2) Id
        L4 = cos(es p) + i eps sin(es p) q - exp(eps*es/2) Id

    (es = eta_square). Comparison baseline only; L1 at eta_square equals
    M1 built with eta = eta_square.
    """
    if dim is None or dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    if eta_square is None or eta_square <= 0:
        raise InvalidParameterError(f"eta_square must be > 0, got {eta_square}")
    if epsilon is None or epsilon <= 0:
        raise InvalidParameterError(f"epsilon must be > 0, got {epsilon}")
    q, p = build_quadratures(dim)
    sq, cq = _trig_pair(q, eta_square)
    sp, cp = _trig_pair(p, eta_square)
    shift = np.exp(epsilon * eta_square / 2.0) * np.eye(dim)
    l1 = sq + 1j * epsilon * (cq @ p.entries)
    l2 = sp - 1j * epsilon * (cp @ q.entries)
    l3 = cq - 1j * epsilon * (sq @ p.entries) - shift
    l4 = cp + 1j * epsilon * (sp @ q.entries) - shift
    return [FockOperator(dim, m) for m in (l1, l2, l3, l4)]


def channel_adjoint_term(M, O):
    """Heisenberg action of one dissipation channel on an observable.

        D*[M](O) = 1/2 M^dag [O, M] + 1/2 [M^dag, O] M
                 = M^dag O M - 1/2 {M^dag M, O}

    Hermitian for Hermitian O by exact symmetrization.
    """
    if not isinstance(M, FockOperator) or not isinstance(O, FockOperator):
        raise ContractViolationError("channel_adjoint_term expects FockOperators")
    if M.dim != O.dim:
        raise ShapeMismatchError(f"operator dims differ: {M.dim} vs {O.dim}")
    if not O.hermitian:
        raise ContractViolationError("observable must be tagged hermitian")
    mdag = M.entries.conj().T
    sandwich = mdag @ O.entries @ M.entries
    ko = (mdag @ M.entries) @ O.entries
    out = sandwich - 0.5 * (ko + ko.conj().T)
    out = 0.5 * (out + out.conj().T)
    return FockOperator(M.dim, out, hermitian=True)
