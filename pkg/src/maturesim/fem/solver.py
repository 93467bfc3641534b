"""Total-Lagrangian Newton solver and maturation marching.

The model couples the hyperelastic composite response with the collagen
density evolution: every assembly runs the local density update at each
Gauss point for the trial displacements, and the converged densities are
committed only when a time step is accepted.  Near-incompressibility of the
matrix is handled with an element-wise mean dilatation: the volumetric
pressure is evaluated at the volume-averaged Jacobian, which adds a
rank-one element stiffness term.

Pressure loads follow the deformed surface by default, so the global
tangent picks up an (unsymmetric) load-stiffness contribution.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..errors import DeformationError, MeshError, SolverError
from ..materials import (MaterialParams, cauchy_stress, response_batch,
                         volumetric_energy, volumetric_modulus,
                         volumetric_pressure)
from ..tensors import fiber_strain
from . import elements as el
from .mesh import Mesh, strip_mesh

RESIDUAL_TOL = 1e-8       # N, infinity norm over free dofs
NEWTON_MAXIT = 25
LINESEARCH_CUTS = 8
STEP_MIN = 1e-8           # day, growth marching gives up below this


@dataclass(frozen=True)
class Dirichlet:
    """Prescribed displacement components on a node set.

    `value` is a constant (scalar or 3-vector) or a callable mapping node
    coordinates (m, 3) to displacements (m, 3); only the axes listed in
    `dofs` are constrained.
    """

    node_set: str
    dofs: tuple = (0, 1, 2)
    value: object = 0.0


@dataclass(frozen=True)
class PressureLoad:
    """Uniform pressure on a face set, in MPa.

    Positive pressure pushes against the outward face normal.  Follower
    loads act on the deformed surface and contribute load stiffness; with
    `follower=False` the traction is evaluated once on the reference
    geometry.
    """

    face_set: str
    pressure: float
    follower: bool = True


@dataclass(frozen=True)
class StepRecord:
    """One accepted step of a maturation march."""

    time: float
    deflection: float      # max |u_z| over all nodes, mm
    rho_mean: float        # volume-weighted Gauss point mean, ug/mm^3
    rho_max: float
    newton_iters: int


class FemModel:
    """Mesh, material, boundary conditions and Gauss-point growth state."""

    def __init__(self, mesh: Mesh, params: MaterialParams,
                 dirichlet=(), loads=()):
        self.mesh = mesh
        self.params = params
        self.conn = mesh.hex8
        self.n_dof = 3 * mesh.n_nodes

        self.dNdX, self.wdet, self.V0 = el.reference_gradients(mesh.nodes[self.conn])
        self.dofmap = (3 * self.conn[:, :, None] + np.arange(3)).reshape(-1, 24)

        fixed = np.zeros(self.n_dof, dtype=bool)
        values = np.zeros(self.n_dof)
        for bc in dirichlet:
            if bc.node_set not in mesh.node_sets:
                raise MeshError(f"unknown node set '{bc.node_set}'")
            ids = mesh.node_sets[bc.node_set]
            if callable(bc.value):
                vals = np.asarray(bc.value(mesh.nodes[ids]), dtype=float)
                if vals.shape != (len(ids), 3):
                    raise MeshError("Dirichlet callable must return (m, 3)")
            else:
                vals = np.broadcast_to(np.asarray(bc.value, dtype=float),
                                       (len(ids), 3))
            for ax in bc.dofs:
                fixed[3 * ids + ax] = True
                values[3 * ids + ax] = vals[:, ax]
        self.fixed = fixed
        self.fixed_values = values
        self.free = ~fixed
        self.free_idx = np.flatnonzero(self.free)
        reduced = np.full(self.n_dof, -1, dtype=int)
        reduced[self.free_idx] = np.arange(len(self.free_idx))
        self._reduced = reduced

        rows = np.broadcast_to(self.dofmap[:, :, None], self.dofmap.shape + (24,))
        cols = np.broadcast_to(self.dofmap[:, None, :], (len(self.conn), 24, 24))
        self._krows, self._kcols, self._kmask = self._reduce_triplets(rows, cols)

        self.loads = []
        for load in loads:
            if load.face_set not in mesh.face_sets:
                raise MeshError(f"unknown face set '{load.face_set}'")
            fnodes = mesh.face_nodes(load.face_set)
            fdofs = (3 * fnodes[:, :, None] + np.arange(3)).reshape(-1, 12)
            lrows = np.broadcast_to(fdofs[:, :, None], fdofs.shape + (12,))
            lcols = np.broadcast_to(fdofs[:, None, :], (len(fnodes), 12, 12))
            trip = self._reduce_triplets(lrows, lcols)
            self.loads.append((load, fnodes, fdofs, trip))

        egrid = (len(self.conn), self.wdet.shape[1])
        self.rho = np.zeros(egrid)
        self.hist_strain = np.zeros(egrid)    # running max fiber strain
        self.hist_psim = np.zeros(egrid)

    def _reduce_triplets(self, rows, cols):
        r = self._reduced[rows].ravel()
        c = self._reduced[cols].ravel()
        keep = (r >= 0) & (c >= 0)
        return r[keep], c[keep], keep

    # -- assembly -----------------------------------------------------------

    def assemble(self, u, t, dt, load_scale=1.0):
        """Residual, reduced tangent and state fields at displacements u.

        Returns (R, K, aux): R is the full residual (internal minus external
        forces, reactions at fixed dofs), K the tangent restricted to free
        dofs, and aux the Gauss-point fields needed to commit or postprocess
        the state.  Raises if an element inverts or the density update fails.
        """
        u = np.asarray(u, dtype=float).reshape(-1)
        ue = u.reshape(-1, 3)[self.conn]
        F = el.deformation_gradients(ue, self.dNdX)
        J = np.linalg.det(F)
        if np.any(J <= 0.0):
            raise DeformationError("an element inverted during the solve")
        C = np.einsum("egki,egkj->egij", F, F)
        _, E_fiber = fiber_strain(C, self.params.collagen.H)
        if float(E_fiber.max(initial=0.0)) > 10.0:
            # far outside any physical state; the exponential fiber law would
            # overflow, so treat it like an inverted element and backtrack
            raise DeformationError("fiber strain left the supported range")

        mat = self.params.matrix
        Jbar = el.mean_dilatation(J, self.wdet, self.V0)
        pbar = volumetric_pressure(Jbar, mat)
        resp = response_batch(C.reshape(-1, 3, 3), self.params,
                              self.rho.reshape(-1), t, dt,
                              pbar=np.repeat(pbar, self.wdet.shape[1]))
        shape = self.wdet.shape
        S6 = resp["S"].reshape(shape + (6,))
        CC = resp["CC"].reshape(shape + (6, 6))

        B = el.b_matrices(F, self.dNdX)
        fint = el.internal_forces(B, S6, self.wdet)
        Ke = el.material_stiffness(B, CC, self.wdet) \
            + el.geometric_stiffness(S6, self.dNdX, self.wdet)
        G = el.volume_gradient(F, J, self.dNdX, self.wdet)
        kvol = volumetric_modulus(Jbar, mat) / self.V0
        Ke += kvol[:, None, None] * G[:, :, None] * G[:, None, :]

        R = np.bincount(self.dofmap.ravel(), weights=fint.ravel(),
                        minlength=self.n_dof)
        data = [Ke.ravel()[self._kmask]]
        rows = [self._krows]
        cols = [self._kcols]

        fext = np.zeros(self.n_dof)
        for load, fnodes, fdofs, (lr, lc, lmask) in self.loads:
            xf = self.mesh.nodes[fnodes]
            if load.follower:
                xf = xf + u.reshape(-1, 3)[fnodes]
            f, Kl = el.face_pressure(xf, load.pressure * load_scale)
            np.add.at(fext, fdofs.ravel(), f.ravel())
            if load.follower:
                # R = fint - fext, so the load stiffness enters negated
                data.append(-Kl.reshape(-1, 12, 12).ravel()[lmask])
                rows.append(lr)
                cols.append(lc)
        R -= fext

        nf = len(self.free_idx)
        K = sp.coo_matrix((np.concatenate(data),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(nf, nf)).tocsc()

        aux = {
            "rho": resp["rho"].reshape(shape),
            "psi_m": resp["psi_m"].reshape(shape),
            "fiber_strain": E_fiber,
            "S": S6,
            "F": F,
            "J": resp["J"].reshape(shape),
            "Jbar": Jbar,
            "psi_point": resp["psi_point"].reshape(shape),
            "residual": R,
            "fext": fext,
        }
        return R, K, aux

    # -- solving ------------------------------------------------------------

    def solve_step(self, u, t, dt, load_scale=1.0, tol=RESIDUAL_TOL,
                   max_iter=NEWTON_MAXIT):
        """Newton solve of one step; returns (u, aux, iterations).

        The incoming state (previous densities) is left untouched; call
        `commit(aux)` once the step is accepted.
        """
        u = np.asarray(u, dtype=float).copy()
        u[self.fixed] = self.fixed_values[self.fixed]
        R, K, aux = self.assemble(u, t, dt, load_scale)
        rnorm = np.abs(R[self.free_idx]).max(initial=0.0)
        stalled = 0
        for it in range(max_iter):
            if rnorm < tol:
                return u, aux, it
            du = splu(K).solve(-R[self.free_idx])
            if not np.all(np.isfinite(du)):
                raise SolverError("linear solve produced non-finite increment",
                                  iteration=it, residual=rnorm)
            alpha = 1.0
            for _ in range(LINESEARCH_CUTS):
                u_try = u.copy()
                u_try[self.free_idx] += alpha * du
                try:
                    R2, K2, aux2 = self.assemble(u_try, t, dt, load_scale)
                except (DeformationError, SolverError):
                    alpha *= 0.5
                    continue
                rn2 = np.abs(R2[self.free_idx]).max(initial=0.0)
                if rn2 < rnorm or rn2 < tol:
                    # without a decent reduction rate Newton is only creeping
                    # along a bending-to-membrane transition; give up early
                    # so the caller can cut the increment or switch to the
                    # damped continuation
                    stalled = stalled + 1 if rn2 > 0.99 * rnorm else 0
                    u, R, K, aux, rnorm = u_try, R2, K2, aux2, rn2
                    break
                alpha *= 0.5
            else:
                raise SolverError("line search failed to reduce the residual",
                                  iteration=it, residual=rnorm)
            if stalled >= 3:
                raise SolverError("Newton stagnated", iteration=it,
                                  residual=rnorm)
        if rnorm < tol:
            return u, aux, max_iter
        raise SolverError("Newton did not converge", residual=rnorm,
                          iterations=max_iter)

    def commit(self, aux):
        """Accept a converged step: densities and history maxima."""
        self.rho = aux["rho"].copy()
        self.hist_strain = np.maximum(self.hist_strain, aux["fiber_strain"])
        self.hist_psim = np.maximum(self.hist_psim, aux["psi_m"])

    # -- postprocessing ------------------------------------------------------

    def record(self, time, u, aux, iters):
        uz = np.abs(np.asarray(u).reshape(-1, 3)[:, 2])
        w = self.wdet
        return StepRecord(time=float(time), deflection=float(uz.max()),
                          rho_mean=float((w * aux["rho"]).sum() / w.sum()),
                          rho_max=float(aux["rho"].max()),
                          newton_iters=int(iters))

    def element_density(self, rho=None):
        """Volume-weighted element means of the Gauss density field."""
        rho = self.rho if rho is None else rho
        return (self.wdet * rho).sum(axis=1) / self.V0

    def element_peak_strain(self):
        """Largest fiber strain each element has seen, max over its points."""
        return self.hist_strain.max(axis=1)

    def total_energy(self, aux):
        """Discrete internal energy matching the assembled forces."""
        pointwise = float((self.wdet * aux["psi_point"]).sum())
        vol = float((self.V0 * volumetric_energy(aux["Jbar"],
                                                 self.params.matrix)).sum())
        return pointwise + vol

    def cell_cauchy(self, aux):
        """Element-mean Cauchy stress 6-vectors from a converged aux."""
        sig = cauchy_stress(aux["F"], aux["S"])
        return (self.wdet[..., None] * sig).sum(axis=1) / self.V0[:, None]


def ramp_pressure(model: FemModel, u=None, t=0.0, tol=RESIDUAL_TOL):
    """Bring the loads to full scale with growth frozen.

    Plain Newton is tried first and usually suffices.  Thin flat sheets
    loaded into the membrane regime defeat it (the flat-state tangent knows
    nothing of membrane stiffening), so on failure a pseudo-transient
    continuation takes over.  Returns (u, aux, total_iters).
    """
    u0 = np.zeros(model.n_dof) if u is None else np.asarray(u, dtype=float)
    try:
        return model.solve_step(u0, t=t, dt=0.0, load_scale=1.0, tol=tol)
    except SolverError:
        return _pseudo_transient(model, u0, t, tol)


def _pseudo_transient(model: FemModel, u, t, tol, max_steps=600):
    """Damped Newton continuation (K + k I) du = -R with adaptive damping.

    Implicit viscous dynamics toward equilibrium: large damping k follows a
    relaxation path that cannot overshoot, k -> 0 recovers plain Newton.
    The residual norm is allowed to rise moderately along the way; flat
    sheets have to climb a residual hill before membrane tension takes
    over, so rejecting every uphill step would freeze the flow.  Steps are
    rejected only when the state leaves the feasible range or the residual
    jumps by more than a factor of five.
    """
    u = np.asarray(u, dtype=float).copy()
    u[model.fixed] = model.fixed_values[model.fixed]
    R, K, aux = model.assemble(u, t, 0.0, load_scale=1.0)
    rnorm = np.abs(R[model.free_idx]).max(initial=0.0)
    fmax = np.abs(aux["fext"]).max(initial=0.0)
    if fmax == 0.0:
        raise SolverError("pseudo-transient continuation needs external loads")
    k0 = 2.0 * fmax
    k = k0
    nf = len(model.free_idx)
    best, best_step = rnorm, 0
    for step in range(max_steps):
        if rnorm < tol:
            return u, aux, step
        Kd = K if k == 0.0 else K + k * sp.identity(nf, format="csc")
        du = splu(Kd).solve(-R[model.free_idx])
        u_try = u.copy()
        u_try[model.free_idx] += du
        try:
            R2, K2, aux2 = model.assemble(u_try, t, 0.0, load_scale=1.0)
            rn2 = np.abs(R2[model.free_idx]).max(initial=0.0)
        except (DeformationError, SolverError):
            rn2 = np.inf
        if not np.isfinite(rn2) or rn2 > 5.0 * rnorm:
            k = max(4.0 * k, 1e-6 * k0)
            if k > 1e9 * k0:
                raise SolverError("pseudo-transient damping diverged",
                                  residual=rnorm)
            continue
        ratio = rn2 / max(rnorm, 1e-300)
        u, R, K, aux, rnorm = u_try, R2, K2, aux2, rn2
        if ratio < 1.0:
            k *= max(ratio, 0.1)
            if k < 1e-8 * k0:
                k = 0.0
        if rnorm < best:
            best, best_step = rnorm, step
        elif step - best_step > 200:
            raise SolverError("pseudo-transient continuation stalled",
                              residual=rnorm)
    raise SolverError("pseudo-transient continuation ran out of steps",
                      residual=rnorm)


def march_maturation(model: FemModel, t_end, dt0=0.002, dt_max=0.25,
                     dt_ratio=1.25, tol=RESIDUAL_TOL, on_step=None):
    """Ramp the load, then march the growth from 0 to t_end days.

    Steps start at dt0 and stretch geometrically by dt_ratio up to dt_max;
    a failed step is retried with half the size.  Accepted steps commit the
    Gauss state and append a StepRecord; `on_step(time, u, aux, model)` runs
    after each accepted step when given.  Returns (history, u, aux).
    """
    u, aux, its = ramp_pressure(model, tol=tol)
    model.commit(aux)
    history = [model.record(0.0, u, aux, its)]
    if on_step is not None:
        on_step(0.0, u, aux, model)

    t, dt = 0.0, float(dt0)
    while t < t_end - 1e-9:
        step = min(dt, t_end - t)
        while True:
            try:
                u_new, aux, its = model.solve_step(u, t=t + step, dt=step,
                                                   tol=tol)
                break
            except SolverError:
                step *= 0.5
                if step < STEP_MIN:
                    raise SolverError("time step collapsed during maturation",
                                      time=t)
        u, t = u_new, t + step
        model.commit(aux)
        history.append(model.record(t, u, aux, its))
        if on_step is not None:
            on_step(t, u, aux, model)
        dt = min(step * dt_ratio, dt_max)
    return history, u, aux


def clamped_strip_model(params: MaterialParams, nx=20, ny=6, nz=2,
                        length=20.0, width=6.0, thickness=0.3,
                        pressure=0.002, follower=True):
    """Pressurized strip: both short ends fully clamped, load from below."""
    mesh = strip_mesh(length, width, thickness, nx, ny, nz)
    bcs = [Dirichlet("xmin"), Dirichlet("xmax")]
    loads = [PressureLoad("bottom", pressure, follower=follower)]
    return FemModel(mesh, params, dirichlet=bcs, loads=loads)
