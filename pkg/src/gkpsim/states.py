"""Finite-energy grid states, logical frame, fidelities, Wigner functions.

Codewords are built by summing Hermite-function columns at the comb peak
positions and applying the diagonal energy regularizer
E_eps = exp(-eps (N + 1/2)), which is exactly diagonal in the Fock basis
because q^2 + p^2 = 2N + 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidDimensionError,
    InvalidParameterError,
    InvalidRequestError,
    ShapeMismatchError,
    TruncationError,
    UnsupportedError,
)
from .fock import FockOperator, build_quadratures, spectral_function

# extra Fock levels used to measure the weight dropped by the truncation
_TAIL_PAD = 32
_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class GkpParams:
    """Lattice dimension d (1 qunaught, 2 qubit), half lattice constant eta,
    and energy regularizer epsilon. eta_square = 2*eta is the full lattice
    constant of the underlying comb."""

    d: int
    eta: float
    epsilon: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidParameterError(f"d must be 1 or 2, got {self.d}")
        if self.eta is None or self.eta <= 0:
            raise InvalidParameterError(f"eta must be > 0, got {self.eta}")
        if self.epsilon is None or self.epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def eta_square(self):
        return 2.0 * self.eta

    @classmethod
    def from_lattice_dim(cls, d, epsilon):
        """Standard square lattice: eta = sqrt(pi*d/2) (eta^2 = pi*d/2 exactly)."""
        if d not in (1, 2):
            raise InvalidParameterError(f"d must be 1 or 2, got {d}")
        return cls(d=d, eta=math.sqrt(math.pi * d / 2.0), epsilon=epsilon)


@dataclass(frozen=True)
class QuantumState:
    """Pure (vector) or mixed (density matrix) state on the truncated space."""

    dim: int
    kind: str
    data: np.ndarray

    def __post_init__(self):
        if self.dim <= 0:
            raise InvalidDimensionError(f"dim must be positive, got {self.dim}")
        data = np.array(self.data, dtype=np.complex128, copy=True)
        if self.kind == "pure":
            if data.shape != (self.dim,):
                raise ShapeMismatchError(
                    f"pure state data shape {data.shape} != ({self.dim},)"
                )
            norm = float(np.linalg.norm(data))
            if abs(norm - 1.0) > 1e-10:
                raise InvalidParameterError(
                    f"pure state norm {norm} deviates from 1 beyond 1e-10"
                )
        elif self.kind == "mixed":
            if data.shape != (self.dim, self.dim):
                raise ShapeMismatchError(
                    f"mixed state data shape {data.shape} != ({self.dim}, {self.dim})"
                )
            tr = complex(np.trace(data))
            if abs(tr - 1.0) > 1e-8:
                raise InvalidParameterError(
                    f"density matrix trace {tr} deviates from 1 beyond 1e-8"
                )
            herm_dev = float(np.max(np.abs(data - data.conj().T)))
            if herm_dev > 1e-10:
                raise InvalidParameterError(
                    f"density matrix hermiticity defect {herm_dev:.3e} > 1e-10"
                )
            min_eig = float(np.linalg.eigvalsh(data)[0])
            if min_eig < -1e-8:
                raise InvalidParameterError(
                    f"density matrix min eigenvalue {min_eig:.3e} < -1e-8"
                )
        else:
            raise InvalidParameterError(f"kind must be 'pure' or 'mixed', got {self.kind}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def pure(cls, vector):
        vector = np.asarray(vector, dtype=np.complex128)
        return cls(dim=vector.shape[0], kind="pure", data=vector)

    @classmethod
    def mixed(cls, matrix):
        matrix = np.asarray(matrix, dtype=np.complex128)
        return cls(dim=matrix.shape[0], kind="mixed", data=matrix)

    def density(self):
        """Density matrix view (outer product for pure states)."""
        if self.kind == "pure":
            return np.outer(self.data, self.data.conj())
        return np.asarray(self.data)

    def expectation(self, op):
        """Real part of tr(rho * op); op is a FockOperator or raw matrix."""
        entries = op.entries if isinstance(op, FockOperator) else np.asarray(op)
        if self.kind == "pure":
            return float(np.real(self.data.conj() @ entries @ self.data))
        return float(np.real(np.einsum("ij,ji->", self.data, entries)))


@dataclass(frozen=True)
class LogicalFrame:
    """Quadrature sign operators acting as logical Pauli coordinates.

    Z = sign(cos(eta q)), X = sign(cos(eta p)), Y = hermitized -iZX.
    y_residual is the dropped anti-Hermitian part of -iZX (O(eps) on the
    full space).
    """

    Z: FockOperator
    X: FockOperator
    Y: FockOperator
    y_residual: float


def vacuum(dim):
    vec = np.zeros(dim, dtype=np.complex128)
    vec[0] = 1.0
    return QuantumState.pure(vec)


def basis_state(dim, n):
    if not (0 <= n < dim):
        raise InvalidParameterError(f"level {n} outside 0..{dim - 1}")
    vec = np.zeros(dim, dtype=np.complex128)
    vec[n] = 1.0
    return QuantumState.pure(vec)


def coherent(dim, alpha):
    """Coherent state |alpha>, renormalized after truncation."""
    if dim < 1:
        raise InvalidDimensionError(f"dim must be >= 1, got {dim}")
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    alpha = complex(alpha)
    if alpha == 0:
        return vacuum(dim)
    log_mag = n * np.log(np.abs(alpha)) - 0.5 * log_fact
    phase = np.exp(1j * n * np.angle(alpha))
    coeff = np.exp(log_mag - log_mag.max()) * phase
    coeff /= np.linalg.norm(coeff)
    return QuantumState.pure(coeff)


def hermite_columns(dim, xs):
    """Matrix phi[n, j] = phi_n(x_j) of Hermite basis functions.

    Recurrence phi_0 = pi^(-1/4) exp(-x^2/2),
    phi_{n+1} = sqrt(2/(n+1)) x phi_n - sqrt(n/(n+1)) phi_{n-1}.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    phi = np.zeros((dim, xs.size), dtype=np.float64)
    phi[0] = np.pi ** -0.25 * np.exp(-0.5 * xs * xs)
    if dim > 1:
        phi[1] = np.sqrt(2.0) * xs * phi[0]
    for n in range(1, dim - 1):
        phi[n + 1] = (
            np.sqrt(2.0 / (n + 1)) * xs * phi[n] - np.sqrt(n / (n + 1.0)) * phi[n - 1]
        )
    return phi


def position_density(state, xs):
    """Diagonal of the position representation, <x|rho|x> on the given grid."""
    phi = hermite_columns(state.dim, xs)
    if state.kind == "pure":
        psi = phi.T.astype(np.complex128) @ state.data
        return np.abs(psi) ** 2
    return np.real(np.einsum("nj,nm,mj->j", phi, state.data, phi))


def _comb_positions(dim, params, k):
    """Peak lattice x_m = (m*d + k) * 2*pi/eta_square within the Fock support."""
    spacing = 2.0 * np.pi / params.eta_square
    reach = np.sqrt(2.0 * dim) + 4.0
    m_max = int(np.ceil(reach / (params.d * spacing))) + 1
    ms = np.arange(-m_max, m_max + 1)
    xs = (ms * params.d + k) * spacing
    return xs[np.abs(xs) <= reach]


def build_codeword(dim, params, k):
    """Finite-energy comb codeword: E_eps applied to the peak-sum comb.

    Fock coefficients c_n proportional to exp(-eps(n+1/2)) * sum_m phi_n(x_m).
    The dropped tail weight is measured by extending the expansion past the
    truncation; weight above 1e-10 raises a truncation error.
    """
    if not isinstance(params, GkpParams):
        raise InvalidParameterError("params must be GkpParams")
    if not (0 <= k < params.d):
        raise InvalidParameterError(f"k must be in 0..{params.d - 1}, got {k}")
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    dim_ext = dim + _TAIL_PAD
    xs = _comb_positions(dim, params, k)
    comb = hermite_columns(dim_ext, xs).sum(axis=1)
    n = np.arange(dim_ext)
    coeff = np.exp(-params.epsilon * (n + 0.5)) * comb
    total = float(np.sum(coeff**2))
    if total <= 0:
        raise TruncationError("codeword weight vanished at this truncation", 1.0)
    tail = float(np.sum(coeff[dim:] ** 2)) / total
    if tail > _TAIL_TOL:
        raise TruncationError(
            f"dropped Fock tail weight {tail:.3e} exceeds {_TAIL_TOL:.0e}; "
            f"increase dim (got {dim})",
            tail,
        )
    vec = coeff[:dim].astype(np.complex128)
    vec /= np.linalg.norm(vec)
    return QuantumState.pure(vec)


_LOGICAL_LABELS = ("+Z", "-Z", "+X", "-X", "+Y", "-Y", "magic")


def build_logical_state(dim, params, label):
    """Logical combination of the two codewords (qubit lattice only).

    |+-X> = (|+Z> +- |-Z>)/norm, |+-Y> = (|+Z> +- i|-Z>)/norm,
    magic = cos(pi/8)|+Z> + sin(pi/8)|-Z> normalized. Normalization accounts
    for the small non-orthogonality of the finite-energy codewords.
    """
    if params.d != 2:
        raise InvalidRequestError(
            f"logical labels need the two-codeword lattice (d=2); got d={params.d}"
        )
    if label not in _LOGICAL_LABELS:
        raise InvalidRequestError(
            f"unknown label {label!r}; expected one of {_LOGICAL_LABELS}"
        )
    zero = build_codeword(dim, params, 0).data
    one = build_codeword(dim, params, 1).data
    if label == "+Z":
        vec = zero.copy()
    elif label == "-Z":
        vec = one.copy()
    elif label == "+X":
        vec = zero + one
    elif label == "-X":
        vec = zero - one
    elif label == "+Y":
        vec = zero + 1j * one
    elif label == "-Y":
        vec = zero - 1j * one
    else:
        vec = np.cos(np.pi / 8) * zero + np.sin(np.pi / 8) * one
    vec = vec / np.linalg.norm(vec)
    return QuantumState.pure(vec)


def _sign_spectrum(values):
    return np.where(values >= 0.0, 1.0, -1.0)


def build_logical_frame(dim, params):
    """Sign-of-cosine logical coordinates Z, X and the hermitized Y = -iZX."""
    if params.d != 2:
        raise InvalidRequestError(
            f"the logical frame needs the two-codeword lattice (d=2); got d={params.d}"
        )
    q, p = build_quadratures(dim)
    eta = params.eta
    Z = spectral_function(q, lambda lam: _sign_spectrum(np.cos(eta * lam)))
    X = spectral_function(p, lambda lam: _sign_spectrum(np.cos(eta * lam)))
    raw = -1j * (Z.entries @ X.entries)
    y_herm = 0.5 * (raw + raw.conj().T)
    y_residual = float(np.max(np.abs(raw - raw.conj().T))) / 2.0
    Y = FockOperator(dim, y_herm, hermitian=True)
    return LogicalFrame(Z=Z, X=X, Y=Y, y_residual=y_residual)


def fidelity(rho, target):
    """Pure-target fidelity <target|rho|target>.

    Mixed targets are out of scope by design; pass the dominant pure
    component instead (see dominant_pure_component).
    """
    if not isinstance(rho, QuantumState) or not isinstance(target, QuantumState):
        raise InvalidParameterError("fidelity expects QuantumState inputs")
    if target.kind != "pure":
        raise UnsupportedError("fidelity supports pure targets only")
    if rho.dim != target.dim:
        raise ShapeMismatchError(f"state dims differ: {rho.dim} vs {target.dim}")
    if rho.kind == "pure":
        return float(np.abs(target.data.conj() @ rho.data) ** 2)
    return float(np.real(target.data.conj() @ rho.data @ target.data))


def dominant_pure_component(state):
    """Unit eigenvector of the largest eigenvalue, as a pure state."""
    if state.kind == "pure":
        return state
    vals, vecs = np.linalg.eigh(state.density())
    vec = vecs[:, -1]
    return QuantumState.pure(vec / np.linalg.norm(vec))


@dataclass(frozen=True)
class WignerGrid:
    """Phase-space grid samples W[i, j] = W(x_j, p_i) plus metadata."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)


def wigner(state, x, p):
    """Wigner function W(x,p) = (1/pi) int <x+y|rho|x-y> exp(-2ipy) dy.

    The state is moved to the position basis through the Hermite-function
    basis matrix; the off-diagonal coordinate y is integrated on a uniform
    Nyquist-safe grid per x column. Grids beyond the truncation validity
    radius sqrt(2 dim) + 2 only add garbage; exceeding it sets a warning
    flag in the metadata instead of failing.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    dim = state.dim
    rho = state.density()
    radius = np.sqrt(2.0 * dim) + 2.0
    exceeded = bool(max(np.max(np.abs(x)), np.max(np.abs(p))) > radius)
    p_scale = max(1.0, float(np.max(np.abs(p))))
    h = np.pi / (4.0 * (p_scale + np.sqrt(2.0 * dim) + 1.0))
    values = np.zeros((p.size, x.size), dtype=np.float64)
    for j, xj in enumerate(x):
        half_reach = max(radius - abs(xj), 0.5)
        n_half = int(np.ceil(half_reach / h))
        ys = h * np.arange(-n_half, n_half + 1)
        cols = hermite_columns(dim, xj + ys).astype(np.complex128)
        # phi(x - y) is phi(x + y) with the y axis reversed
        corr = np.einsum("nk,nk->k", cols.conj(), rho @ cols[:, ::-1])
        weights = np.full(ys.size, h)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        kernel = np.exp(-2j * np.outer(p, ys))
        values[:, j] = np.real(kernel @ (weights * corr)) / np.pi
    norm_check = float(np.trapezoid(np.trapezoid(values, x, axis=1), p)) if (
        x.size > 1 and p.size > 1
    ) else float("nan")
    meta = {
        "dim": dim,
        "validity_radius": float(radius),
        "grid_exceeds_validity": exceeded,
        "normalization_check": norm_check,
        "y_step": float(h),
    }
    return WignerGrid(x=x, p=p, values=values, metadata=meta)


def wigner_marginal_x(grid):
    """Integrate W over p; recovers the position density on the x grid."""
    return np.trapezoid(grid.values, grid.p, axis=0)
