"""Dense operator algebra over truncated composite Hilbert spaces.

Operators are plain complex matrices tagged with a :class:`SpaceLayout`
describing the tensor factorisation.  The largest space used by the models
here is 2 x 9 x 9 = 162, so everything stays dense and immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import TruncationError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-8


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions and names of a composite space."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.dims) == 0:
            raise ValueError("layout needs at least one subsystem")
        if any((not isinstance(d, int)) or d < 1 for d in self.dims):
            raise ValueError(f"subsystem dimensions must be positive integers, got {self.dims}")
        if len(self.labels) != len(self.dims):
            raise ValueError("one label per subsystem required")

    @classmethod
    def of(cls, dims: Sequence[int], labels: Sequence[str] | None = None) -> "SpaceLayout":
        dims = tuple(int(d) for d in dims)
        if labels is None:
            labels = tuple(f"q{i}" for i in range(len(dims)))
        return cls(dims, tuple(labels))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    @property
    def nsub(self) -> int:
        return len(self.dims)

    def index(self, label: str) -> int:
        """Index of the first subsystem with the given label."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no subsystem labelled {label!r} in {self.labels}") from None


class Operator:
    """Immutable dense complex operator on a composite space."""

    __slots__ = ("layout", "matrix")

    def __init__(self, layout: SpaceLayout, matrix: np.ndarray, *, copy: bool = True):
        if copy:
            matrix = np.array(matrix, dtype=np.complex128)
        else:
            matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {matrix.shape}")
        if matrix.shape[0] != layout.total:
            raise ValueError(
                f"matrix side {matrix.shape[0]} does not match layout dimension {layout.total}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("Operator instances are immutable")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_defect(self) -> float:
        """Max elementwise deviation from self-adjointness."""
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.hermiticity_defect() <= tol

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Operator):
            if other.layout.dims != self.layout.dims:
                raise ValueError(
                    f"layout mismatch: {self.layout.dims} vs {other.layout.dims}"
                )
            return other.matrix
        raise TypeError(f"expected Operator, got {type(other).__name__}")

    def __add__(self, other) -> "Operator":
        return Operator(self.layout, self.matrix + self._coerce(other))

    def __sub__(self, other) -> "Operator":
        return Operator(self.layout, self.matrix - self._coerce(other))

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.matrix)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products")
        return Operator(self.layout, self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other) -> "Operator":
        return Operator(self.layout, self.matrix @ self._coerce(other))

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dims={self.layout.dims})"


class DensityMatrix(Operator):
    """Hermitian, unit-trace, positive-semidefinite operator.

    Invariants (hermiticity within 1e-10, trace within 1e-10 of one, smallest
    eigenvalue >= -1e-8) are checked at construction; pass ``validate=False``
    only for states already verified elsewhere.
    """

    __slots__ = ()

    def __init__(self, layout, matrix, *, copy: bool = True, validate: bool = True):
        super().__init__(layout, matrix, copy=copy)
        if validate:
            defect = self.hermiticity_defect()
            if defect > HERMITICITY_TOL:
                raise ValueError(f"density matrix not Hermitian: defect {defect:.3e}")
            tr = self.trace()
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"density matrix trace {tr:.12f} != 1")
            lo = float(np.linalg.eigvalsh(self.matrix).min())
            if lo < POSITIVITY_TOL:
                raise ValueError(f"density matrix not positive: min eigenvalue {lo:.3e}")


def identity(levels: int, *, label: str = "q") -> Operator:
    if levels < 1:
        raise ValueError("identity needs at least one level")
    return Operator(SpaceLayout.of((levels,), (label,)), np.eye(levels))


def annihilation(levels: int, *, label: str = "mode") -> Operator:
    """Truncated ladder operator with sqrt(n) on the first superdiagonal."""
    if levels < 1:
        raise ValueError(f"need at least one level, got {levels}")
    mat = np.diag(np.sqrt(np.arange(1, levels, dtype=float)), k=1)
    return Operator(SpaceLayout.of((levels,), (label,)), mat)


def creation(levels: int, *, label: str = "mode") -> Operator:
    return annihilation(levels, label=label).dag()


def position(levels: int, *, label: str = "mode") -> Operator:
    """Dimensionless quadrature X = b + b^dag."""
    if levels < 2:
        raise ValueError("position operator needs at least two levels")
    b = annihilation(levels, label=label)
    return b + b.dag()


def momentum(levels: int, *, label: str = "mode") -> Operator:
    """Dimensionless quadrature P = i(b^dag - b)."""
    if levels < 2:
        raise ValueError("momentum operator needs at least two levels")
    b = annihilation(levels, label=label)
    return 1j * (b.dag() - b)


def tensor(ops: Iterable[Operator]) -> Operator:
    """Kronecker product with concatenated layouts, left to right."""
    ops = list(ops)
    if not ops:
        raise ValueError("tensor of zero operators is undefined")
    for op in ops:
        if op.dim == 0:
            raise ValueError("tensor factors must have nonzero dimension")
    mat = ops[0].matrix
    for op in ops[1:]:
        mat = np.kron(mat, op.matrix)
    dims = tuple(d for op in ops for d in op.layout.dims)
    labels = tuple(l for op in ops for l in op.layout.labels)
    return Operator(SpaceLayout(dims, labels), mat, copy=False)


def fock_state(levels: int, n: int, *, label: str = "mode") -> DensityMatrix:
    """Projector onto the number state |n>."""
    if not 0 <= n < levels:
        raise ValueError(f"occupation {n} outside truncation 0..{levels - 1}")
    mat = np.zeros((levels, levels), dtype=complex)
    mat[n, n] = 1.0
    return DensityMatrix(SpaceLayout.of((levels,), (label,)), mat, copy=False)


def thermal_state(omega: float, kbt: float, levels: int, *, label: str = "mode") -> DensityMatrix:
    """Truncated Boltzmann state of a mode, renormalised to unit trace."""
    if omega <= 0 or kbt <= 0:
        raise ValueError("omega and kBT must be positive")
    if levels < 1:
        raise ValueError("need at least one level")
    n = np.arange(levels, dtype=float)
    with np.errstate(under="ignore"):
        weights = np.exp(-n * omega / kbt)
    populations = weights / weights.sum()
    return DensityMatrix(SpaceLayout.of((levels,), (label,)), np.diag(populations), copy=False)


def coherent_state(alpha: complex, levels: int, *, label: str = "mode",
                   min_captured: float = 0.999) -> DensityMatrix:
    """Pure coherent-state projector, renormalised after truncation.

    Raises :class:`TruncationError` when the truncated amplitudes capture less
    than ``min_captured`` of the full state's probability weight.
    """
    if levels < 1:
        raise ValueError("need at least one level")
    amps = np.zeros(levels, dtype=complex)
    amps[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, levels):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    captured = float(np.sum(np.abs(amps) ** 2))
    if captured < min_captured:
        raise TruncationError(
            f"coherent state alpha={alpha} holds only {captured:.6f} of its weight "
            f"in {levels} levels; increase the truncation"
        )
    amps /= math.sqrt(captured)
    return DensityMatrix(SpaceLayout.of((levels,), (label,)), np.outer(amps, amps.conj()),
                         copy=False)


def partial_trace_matrix(matrix: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a raw matrix; used on unnormalised states as well."""
    dims = tuple(dims)
    n = len(dims)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} outside 0..{n - 1}")
    arr = matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    count = n
    for i in sorted(traced, reverse=True):
        arr = np.trace(arr, axis1=i, axis2=count + i)
        count -= 1
    side = int(np.prod([dims[k] for k in keep]))
    return np.ascontiguousarray(arr.reshape(side, side))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix over the kept subsystems, in original order."""
    keep = sorted(set(keep))
    reduced = partial_trace_matrix(rho.matrix, rho.layout.dims, keep)
    layout = SpaceLayout(tuple(rho.layout.dims[k] for k in keep),
                         tuple(rho.layout.labels[k] for k in keep))
    return DensityMatrix(layout, reduced, copy=False)


def expectation(rho: DensityMatrix, obs: Operator) -> float:
    """tr(rho * obs) for a Hermitian observable; the tiny imaginary residue is dropped."""
    if rho.layout.dims != obs.layout.dims:
        raise ValueError(f"layout mismatch: {rho.layout.dims} vs {obs.layout.dims}")
    defect = obs.hermiticity_defect()
    if defect > HERMITICITY_TOL:
        raise ValueError(f"observable not Hermitian: defect {defect:.3e}")
    value = complex(np.einsum("ij,ji->", rho.matrix, obs.matrix))
    if abs(value.imag) >= 1e-9:
        raise ValueError(f"expectation value has imaginary part {value.imag:.3e}")
    return float(value.real)
