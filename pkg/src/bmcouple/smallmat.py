"""Small fixed-size linear algebra for the coupling constructions.

Rotations in R^3, alignment of unit-vector pairs to a canonical position,
the pair of driver matrices that freezes the distance of two spherical
Brownian motions, trigonometric angle solving, block rotations and
orthonormal frame completion.  Everything here is deterministic, works on
plain numpy arrays, and is safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CouplingConstraintError, DegenerateInputError, DomainError, InfeasibleRateError

MAX_DIM = 16
UNIT_TOL = 1e-12
PARALLEL_TOL = 1e-10
FRAME_TOL = 1e-10


def _as_vec(x, dim=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError(f"expected a vector, got shape {x.shape}")
    if x.shape[0] > MAX_DIM:
        raise DomainError(f"dimension {x.shape[0]} exceeds the supported maximum {MAX_DIM}")
    if dim is not None and x.shape[0] != dim:
        raise DomainError(f"expected a vector of dimension {dim}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DomainError("vector has non-finite entries")
    return x


def _require_unit(x: np.ndarray, name: str) -> None:
    if abs(np.dot(x, x) - 1.0) > 2 * UNIT_TOL:
        raise DomainError(f"{name} must be a unit vector (|{name}| = {np.linalg.norm(x):.17g})")


def rodrigues_rotation(x, y) -> np.ndarray:
    """Rotation matrix taking the unit vector x to the unit vector y.

    The axis is x cross y (left unnormalized, which absorbs the sine of the
    rotation angle) and the angle is the angle between x and y.  The parallel
    and antiparallel cases return +I and -I respectively.

    Near-antiparallel pairs are computed as the product of two reflections
    (the same rotation, without the ill-conditioned 1/(1+c) term).
    """
    x = _as_vec(x, 3)
    y = _as_vec(y, 3)
    _require_unit(x, "x")
    _require_unit(y, "y")
    c = float(np.dot(x, y))
    if c >= 1.0 - UNIT_TOL:
        return np.eye(3)
    if c <= -1.0 + UNIT_TOL:
        return -np.eye(3)
    if c < -0.5:
        mid = x + y
        mid /= np.linalg.norm(mid)
        reflect_mid = np.eye(3) - 2.0 * np.outer(mid, mid)
        reflect_x = np.eye(3) - 2.0 * np.outer(x, x)
        return reflect_mid @ reflect_x
    cross = np.outer(y, x) - np.outer(x, y)
    u = np.cross(x, y)
    return c * np.eye(3) + cross + np.outer(u, u) / (1.0 + c)


def frame_align(x, y) -> np.ndarray:
    """Orthogonal matrix O with O e1 = x and O (c e1 + sqrt(1-c^2) e2) = y, c = x.y.

    The third column is (x cross y)/sqrt(1-c^2); of the two orthogonal
    completions we always take this "+" choice.
    """
    x = _as_vec(x, 3)
    y = _as_vec(y, 3)
    _require_unit(x, "x")
    _require_unit(y, "y")
    c = float(np.dot(x, y))
    if abs(c) >= 1.0 - PARALLEL_TOL:
        raise DegenerateInputError(f"x and y are (near-)parallel: x.y = {c:.17g}")
    out = np.empty((3, 3))
    out[:, 0] = x
    # explicit re-orthogonalization keeps the columns orthonormal to machine
    # precision even for nearly parallel inputs
    col = y - c * x
    col -= np.dot(col, x) * x
    out[:, 1] = col / np.linalg.norm(col)
    out[:, 2] = np.cross(x, out[:, 1])
    return out


def fixed_distance_blocks(c: float) -> tuple[np.ndarray, np.ndarray]:
    """Driver matrices in the aligned basis where X = e1 and Y = c e1 + sqrt(1-c^2) e2.

    Returns the unique minimal-norm pair whose conjugation back by the
    aligning rotation solves the fixed-distance system; see
    fixed_distance_matrices.
    """
    if not -1.0 < c < 1.0:
        raise DegenerateInputError(f"cosine must lie strictly inside (-1, 1), got {c}")
    s = np.sqrt(1.0 - c * c)
    jt = np.array([[0.0, -s, 0.0], [0.0, c, 0.0], [0.0, 0.0, c]])
    kt = np.array([[0.0, c, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]])
    return jt, kt


def fixed_distance_matrices(x, y) -> tuple[np.ndarray, np.ndarray]:
    """Matrices (J, K) composing the driver of Y so that |X - Y| stays constant.

    J and K satisfy, with c = x.y:

        x' J y = c tr(J) - 1 - c^2
        x' J x + y' J y - c y' J x = tr(J) - 2 c
        J J' + K K' = I

    and the operator norm of J is at most 1.
    """
    o = frame_align(x, y)
    jt, kt = fixed_distance_blocks(float(np.dot(x, y)))
    return o @ jt @ o.T, o @ kt @ o.T


def fixed_distance_residuals(x, y, j: np.ndarray, k: np.ndarray) -> tuple[float, float, float]:
    """Absolute residuals of the three fixed-distance equations for given (J, K)."""
    x = _as_vec(x, 3)
    y = _as_vec(y, 3)
    c = float(np.dot(x, y))
    tr = float(np.trace(j))
    r1 = abs(float(x @ j @ y) - (c * tr - 1.0 - c * c))
    r2 = abs(float(x @ j @ x + y @ j @ y - c * (y @ j @ x)) - (tr - 2.0 * c))
    r3 = float(np.max(np.abs(j @ j.T + k @ k.T - np.eye(3))))
    return r1, r2, r3


def check_driver_pair(j: np.ndarray, k: np.ndarray, tol: float = 1e-10) -> None:
    """Raise unless J J' + K K' = I within tol."""
    j = np.asarray(j, dtype=float)
    k = np.asarray(k, dtype=float)
    resid = np.max(np.abs(j @ j.T + k @ k.T - np.eye(j.shape[0])))
    if resid > tol:
        raise CouplingConstraintError(f"J J' + K K' deviates from I by {resid:.3e}")


def solve_alpha(a: float, b: float, c: float) -> float:
    """Angle alpha in [0, 2*pi) with a cos(alpha) + b sin(alpha) = c.

    Writes the left side as m cos(alpha - phi) with m = sqrt(a^2 + b^2) and
    phi = atan2(b, a); feasible iff |c| <= m.  For b >= 0 this reduces to
    arccos(a/m) + arccos(c/m).
    """
    m = float(np.hypot(a, b))
    if m == 0.0 or abs(c) > m * (1.0 + 1e-15):
        raise InfeasibleRateError(f"|c| = {abs(c):.17g} exceeds sqrt(a^2+b^2) = {m:.17g}")
    phi = np.arctan2(b, a)
    alpha = phi + np.arccos(np.clip(c / m, -1.0, 1.0))
    return float(np.mod(alpha, 2.0 * np.pi))


def block_rotation(n: int, alpha: float, fixed_first: bool = True) -> np.ndarray:
    """Orthogonal matrix made of n/2 diagonal 2x2 rotation blocks by alpha.

    With fixed_first a leading row/column equal to e1 is prepended, giving an
    (n+1) x (n+1) matrix; n must be even.  Blocks are
    [[cos a, sin a], [-sin a, cos a]].
    """
    if n < 0 or n % 2 != 0:
        raise DomainError(f"number of rotated coordinates must be even and >= 0, got {n}")
    size = n + 1 if fixed_first else n
    if size > MAX_DIM:
        raise DomainError(f"matrix size {size} exceeds the supported maximum {MAX_DIM}")
    out = np.eye(size)
    ca, sa = np.cos(alpha), np.sin(alpha)
    start = 1 if fixed_first else 0
    for i in range(start, size - 1, 2):
        out[i, i] = ca
        out[i, i + 1] = sa
        out[i + 1, i] = -sa
        out[i + 1, i + 1] = ca
    return out


def complete_frame(vectors) -> np.ndarray:
    """Unit vector completing d orthonormal vectors in R^(d+1) to a +1-determinant basis.

    The output is orthogonal to every input and oriented so that the matrix
    [v_1, ..., v_d, out] has determinant +1.
    """
    vs = np.asarray(vectors, dtype=float)
    if vs.ndim != 2 or vs.shape[1] != vs.shape[0] + 1:
        raise DomainError(f"expected d orthonormal vectors in R^(d+1), got shape {vs.shape}")
    if vs.shape[1] > MAX_DIM:
        raise DomainError(f"dimension {vs.shape[1]} exceeds the supported maximum {MAX_DIM}")
    gram = vs @ vs.T
    if np.max(np.abs(gram - np.eye(vs.shape[0]))) > FRAME_TOL:
        raise DegenerateInputError("input vectors are not orthonormal or rank deficient")
    # Null space of the stacked rows; orthonormality makes it one-dimensional.
    _, _, vt = np.linalg.svd(vs, full_matrices=True)
    out = vt[-1]
    if np.linalg.det(np.column_stack([vs.T, out])) < 0.0:
        out = -out
    return out


@dataclass(frozen=True)
class NFrame:
    """Surjective partial isometry from R^n_drive onto a d-dimensional tangent space.

    ``mat`` has shape (d, n_drive) with mat mat' = I_d; ``base`` records
    the ambient coordinates of the footpoint.  n_drive is d for odd d and
    d + 1 for even d in the coupling construction, but any n_drive >= d
    is a valid frame.
    """

    base: np.ndarray
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=float)
        d, n = mat.shape
        if n < d or n > MAX_DIM:
            raise DomainError(f"frame shape {mat.shape} is not (d, N) with d <= N <= {MAX_DIM}")
        resid = np.max(np.abs(mat @ mat.T - np.eye(d)))
        if resid > 1e-12:
            raise DomainError(f"frame rows are not orthonormal (residual {resid:.3e})")
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def drive_dim(self) -> int:
        return self.mat.shape[1]


def frame_alignment_matrix(frame: NFrame) -> np.ndarray:
    """Orthogonal N x N matrix sending e_j to the j-th coordinate image of the frame.

    For a square frame (N = d) this is just the transpose of the frame matrix.
    For N = d + 1 the image vectors only span a hyperplane, and the last
    column is filled with the oriented completion of the first d columns.
    """
    d, n = frame.mat.shape
    if n == d:
        return frame.mat.T.copy()
    if n == d + 1:
        cols = frame.mat  # rows are U' e_j for the tangent basis, i.e. the f_j
        return np.column_stack([cols.T, complete_frame(cols)])
    raise DomainError(f"alignment is defined for N in (d, d+1), got d={d}, N={n}")
