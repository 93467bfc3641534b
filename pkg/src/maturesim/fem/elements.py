"""Batched trilinear brick kernels for the total-Lagrangian solver.

Everything here is stateless and vectorized over (element, gauss point)
leading axes so that the whole mesh is assembled with a handful of array
operations.  Stress and strain follow the 6-vector convention of
`maturesim.tensors`; element degrees of freedom are ordered node-major,
(node 0 x, node 0 y, node 0 z, node 1 x, ...).
"""

import numpy as np

from ..errors import MeshError
from ..tensors import VOIGT_I, VOIGT_J, from_voigt

# corner coordinates of the parent cube, same order as Mesh.hex8
CORNERS = np.array([
    [-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0],
])
# 2x2x2 Gauss rule: points at the corner pattern scaled by 1/sqrt(3), unit weights
GAUSS_POINTS = CORNERS / np.sqrt(3.0)
GAUSS_WEIGHTS = np.ones(8)

# quad corners of the parent face, matching mesh.FACE_CORNERS slot order
QUAD_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
QUAD_GAUSS = QUAD_CORNERS / np.sqrt(3.0)


def shape_functions(xi):
    """Trilinear shape values N_a(xi) for points xi of shape (..., 3)."""
    xi = np.asarray(xi, dtype=float)
    return 0.125 * np.prod(1.0 + xi[..., None, :] * CORNERS, axis=-1)


def shape_gradients(xi):
    """dN_a/dxi_i at points xi of shape (..., 3); result (..., 8, 3)."""
    xi = np.asarray(xi, dtype=float)
    terms = 1.0 + xi[..., None, :] * CORNERS          # (..., 8, 3)
    grad = np.empty(xi.shape[:-1] + (8, 3))
    for i in range(3):
        others = [j for j in range(3) if j != i]
        grad[..., i] = 0.125 * CORNERS[:, i] * np.prod(terms[..., others], axis=-1)
    return grad


def quad_shape_functions(xi2):
    xi2 = np.asarray(xi2, dtype=float)
    return 0.25 * np.prod(1.0 + xi2[..., None, :] * QUAD_CORNERS, axis=-1)


def quad_shape_gradients(xi2):
    """Bilinear gradients on the parent quad; result (..., 4, 2)."""
    xi2 = np.asarray(xi2, dtype=float)
    terms = 1.0 + xi2[..., None, :] * QUAD_CORNERS
    grad = np.empty(xi2.shape[:-1] + (4, 2))
    grad[..., 0] = 0.25 * QUAD_CORNERS[:, 0] * terms[..., 1]
    grad[..., 1] = 0.25 * QUAD_CORNERS[:, 1] * terms[..., 0]
    return grad


# fixed-rule tables reused by every element batch
DNDXI = shape_gradients(GAUSS_POINTS)            # (8 gp, 8 nodes, 3)
QUAD_N = quad_shape_functions(QUAD_GAUSS)        # (4 gp, 4 nodes)
QUAD_DN = quad_shape_gradients(QUAD_GAUSS)       # (4 gp, 4 nodes, 2)


def reference_gradients(Xe):
    """Shape gradients w.r.t. reference coordinates per element and point.

    Xe holds the element corner coordinates (E, 8, 3).  Returns
    (dNdX (E, G, 8, 3), wdet (E, G), V0 (E,)).  Rejects elements whose
    isoparametric map is folded (non-positive Jacobian at a Gauss point).
    """
    Xe = np.asarray(Xe, dtype=float)
    jac = np.einsum("eai,gaj->egij", Xe, DNDXI)
    det = np.linalg.det(jac)
    if np.any(det <= 0.0):
        raise MeshError("element Jacobian is non-positive; check corner order")
    inv = np.linalg.inv(jac)
    dNdX = np.einsum("gaj,egji->egai", DNDXI, inv)
    wdet = GAUSS_WEIGHTS[None, :] * det
    return dNdX, wdet, wdet.sum(axis=1)


def deformation_gradients(ue, dNdX):
    """F = I + grad u at every Gauss point; ue is (E, 8, 3)."""
    F = np.einsum("eai,egaj->egij", ue, dNdX)
    F[..., 0, 0] += 1.0
    F[..., 1, 1] += 1.0
    F[..., 2, 2] += 1.0
    return F


def b_matrices(F, dNdX):
    """Strain-displacement operators dE_eng = B du_e, shape (E, G, 6, 24)."""
    t1 = np.einsum("egkm,egam->egmak", F[..., :, VOIGT_I], dNdX[..., VOIGT_J])
    t2 = np.einsum("egkm,egam->egmak", F[..., :, VOIGT_J], dNdX[..., VOIGT_I])
    off = (VOIGT_I != VOIGT_J).astype(float)
    B = t1 + off[None, None, :, None, None] * t2
    e, g = B.shape[:2]
    return B.reshape(e, g, 6, 24)


def internal_forces(B, S6, wdet):
    """Element internal force vectors sum_g w |J| B^T S, shape (E, 24)."""
    return np.einsum("eg,egmn,egm->en", wdet, B, S6)


def material_stiffness(B, CC, wdet):
    """sum_g w |J| B^T CC B as (E, 24, 24)."""
    CB = CC @ B
    return np.einsum("eg,egmi,egmj->eij", wdet, B, CB)


def geometric_stiffness(S6, dNdX, wdet):
    """Initial-stress stiffness, block diagonal in the spatial index."""
    S = from_voigt(S6)
    kab = np.einsum("eg,egak,egkl,egbl->eab", wdet, dNdX, S, dNdX)
    e = kab.shape[0]
    K = (kab[:, :, None, :, None] * np.eye(3)[None, None, :, None, :])
    return K.reshape(e, 24, 24)


def volume_gradient(F, J, dNdX, wdet):
    """G_e = sum_g w |J_ref| J F^-T grad N as (E, 24); dJbar/du = G/V0."""
    spat = np.einsum("egki,egak->egai", np.linalg.inv(F), dNdX)
    G = np.einsum("eg,eg,egai->eai", wdet, J, spat)
    return G.reshape(G.shape[0], 24)


def mean_dilatation(J, wdet, V0):
    """Element-volume-averaged Jacobian Jbar."""
    return np.einsum("eg,eg->e", wdet, J) / V0


def _skew(v):
    S = np.zeros(v.shape[:-1] + (3, 3))
    S[..., 0, 1] = -v[..., 2]
    S[..., 0, 2] = v[..., 1]
    S[..., 1, 0] = v[..., 2]
    S[..., 1, 2] = -v[..., 0]
    S[..., 2, 0] = -v[..., 1]
    S[..., 2, 1] = v[..., 0]
    return S


def face_pressure(xf, pressure):
    """Follower pressure forces and load stiffness on quad faces.

    xf holds current face corner coordinates (M, 4, 3); `pressure` acts
    against the outward normal (positive pressure pushes into the element
    behind the face).  Returns nodal forces (M, 4, 3) and the derivative
    d f_a / d x_b as (M, 4, 3, 4, 3).
    """
    xf = np.asarray(xf, dtype=float)
    x_xi = np.einsum("ga,mai->mgi", QUAD_DN[..., 0], xf)
    x_eta = np.einsum("ga,mai->mgi", QUAD_DN[..., 1], xf)
    nvec = np.cross(x_xi, x_eta)                       # outward normal * area
    f = -pressure * np.einsum("ga,mgi->mai", QUAD_N, nvec)
    # d(x_xi x x_eta) = -skew(x_eta) dx_xi + skew(x_xi) dx_eta
    dn = np.einsum("gb,mgij->mgbij", QUAD_DN[..., 1], _skew(x_xi)) \
        - np.einsum("gb,mgij->mgbij", QUAD_DN[..., 0], _skew(x_eta))
    K = -pressure * np.einsum("ga,mgbij->maibj", QUAD_N, dn)
    return f, K
