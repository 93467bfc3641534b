"""Small-tensor kinematics and symmetric-tensor conventions.

Unit system used throughout the package: mm, N, MPa, microgram, day.

General second-order tensors (deformation gradients, rotations) are plain
numpy arrays of shape (..., 3, 3).  Symmetric second-order tensors that are
stored or returned as data (stresses, structural tensors) use a 6-component
vector with the fixed ordering

    [11, 22, 33, 12, 13, 23]

and no shear scaling on the components themselves.  Fourth-order tangents
with minor symmetries are 6x6 matrices whose entries are plain tensor
components CC[(ij),(kl)].  With that convention the increment relation is

    dS = CC @ dE_eng,   dE_eng = [dE11, dE22, dE33, 2*dE12, 2*dE13, 2*dE23]

where E = (C - I)/2, i.e. the usual stiffness-matrix layout with engineering
shear on the strain side.  Tangents derived from an energy are symmetric.

All functions broadcast over leading axes so that material-point and batched
Gauss-point evaluations share one code path.
"""

import numpy as np

from .errors import DeformationError, ParameterError

# Component order of the symmetric 6-vector: (i, j) index pairs.
VOIGT_I = np.array([0, 1, 2, 0, 0, 1])
VOIGT_J = np.array([0, 1, 2, 1, 2, 2])
# Multiplicity of each pair when contracting two symmetric tensors.
VOIGT_WEIGHTS = np.array([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])

IDENTITY6 = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])


def to_voigt(A):
    """Pack the upper triangle of symmetric (..., 3, 3) into (..., 6)."""
    A = np.asarray(A, dtype=float)
    return A[..., VOIGT_I, VOIGT_J]


def from_voigt(v):
    """Unpack (..., 6) into full symmetric (..., 3, 3)."""
    v = np.asarray(v, dtype=float)
    A = np.empty(v.shape[:-1] + (3, 3))
    A[..., VOIGT_I, VOIGT_J] = v
    A[..., VOIGT_J, VOIGT_I] = v
    return A


def sym_dot(a6, b6):
    """Full contraction A:B of two symmetric tensors in 6-vector form."""
    return np.einsum("...i,...i->...", a6, VOIGT_WEIGHTS * b6)


def outer6(a6, b6):
    """Dyadic product A (x) B as a 6x6 tangent block."""
    return a6[..., :, None] * b6[..., None, :]


def sym_outer_product(A, B):
    """Symmetrized product (A . B)_ijkl = (A_ik B_jl + A_il B_jk) / 2.

    Both arguments are full (..., 3, 3) symmetric tensors; the result is the
    6x6 tangent block of that fourth-order tensor.
    """
    i = VOIGT_I[:, None]
    j = VOIGT_J[:, None]
    k = VOIGT_I[None, :]
    l = VOIGT_J[None, :]
    return 0.5 * (A[..., i, k] * B[..., j, l] + A[..., i, l] * B[..., j, k])


def unit_vector(v):
    """Normalize a direction vector; reject vectors of vanishing length."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ParameterError(f"direction must be a 3-vector, got shape {v.shape}")
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise ParameterError("direction vector has (near-)zero length")
    return v / n


def right_cauchy_green(F):
    """C = F^T F.  Rejects deformation gradients with det F <= 0."""
    F = np.asarray(F, dtype=float)
    J = np.linalg.det(F)
    if np.any(J <= 0.0):
        raise DeformationError(f"det F must be positive, got min {np.min(J):g}")
    return np.einsum("...ki,...kj->...ij", F, F)


def gen_structural_tensor(a, kappa):
    """Generalized structural tensor H = kappa*I + (1 - 3*kappa) a (x) a.

    `a` is normalized internally; kappa in [0, 1/3] measures the dispersion
    of the fiber family (0: perfectly aligned, 1/3: isotropic).  trace(H) = 1
    up to round-off by construction.
    """
    if not 0.0 <= kappa <= 1.0 / 3.0:
        raise ParameterError(f"kappa must lie in [0, 1/3], got {kappa}")
    a = unit_vector(a)
    return kappa * np.eye(3) + (1.0 - 3.0 * kappa) * np.outer(a, a)


def fiber_strain(C, H):
    """Squared mean fiber stretch and Green-type fiber strain.

    lambda^2 = tr(C H) for symmetric C and H; E = lambda^2 - 1.  Linear in C,
    so scaling C scales E + 1 accordingly.
    """
    lam_sq = np.einsum("...ij,...ij->...", np.asarray(C, dtype=float), H)
    return lam_sq, lam_sq - 1.0


def structural_dyad(n):
    """Rank-one structural tensor M = n (x) n for a textile yarn direction."""
    n = unit_vector(n)
    return np.outer(n, n)


def textile_invariants(C, M1, M2):
    """Isotropic and yarn-direction invariants of C.

    Returns (I1, I2t, I3t, I4t, I5t) with I1 = tr C, I2t = tr(C M1),
    I3t = tr(C^2 M1), I4t = tr(C M2), I5t = tr(C^2 M2).
    """
    C = np.asarray(C, dtype=float)
    C2 = C @ C
    i1 = np.trace(C, axis1=-2, axis2=-1)
    i2 = np.einsum("...ij,...ij->...", C, M1)
    i3 = np.einsum("...ij,...ij->...", C2, M1)
    i4 = np.einsum("...ij,...ij->...", C, M2)
    i5 = np.einsum("...ij,...ij->...", C2, M2)
    return i1, i2, i3, i4, i5
