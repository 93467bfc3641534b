"""Newton solver, patch test and maturation marching tests."""

import numpy as np
import pytest

from maturesim.errors import MeshError, SolverError
from maturesim.fem import (Dirichlet, FemModel, PressureLoad,
                           clamped_strip_model, march_maturation,
                           ramp_pressure, strip_mesh)
from maturesim.fem.mesh import Mesh
from maturesim.matpoint import LoadProgram, solve_mixed_point

from conftest import make_material

from _oracles import rel_err


def _all_boundary(mesh):
    ids = np.concatenate([mesh.node_sets[k] for k in
                          ("xmin", "xmax", "ymin", "ymax", "zmin", "zmax")])
    return np.unique(ids)


class TestStaticSolves:
    def test_rigid_translation_is_stress_free(self):
        params = make_material()
        mesh = strip_mesh(2.0, 1.0, 0.5, 2, 2, 1)
        shift = np.array([0.017, -0.008, 0.031])
        model = FemModel(mesh, params,
                         dirichlet=[Dirichlet("xmin", value=shift),
                                    Dirichlet("xmax", value=shift)])
        u, aux, _ = model.solve_step(np.zeros(model.n_dof), t=0.0, dt=0.0)
        assert np.allclose(u.reshape(-1, 3), shift, atol=1e-10)
        assert np.abs(aux["S"]).max() < 1e-10
        assert np.abs(aux["residual"]).max() < 1e-8

    def test_patch_test_affine_field(self):
        # distorted interior mesh must reproduce a homogeneous state exactly
        params = make_material()
        mesh = strip_mesh(2.0, 2.0, 2.0, 2, 2, 2)
        nodes = mesh.nodes.copy()
        interior = np.flatnonzero(
            np.all((nodes > 1e-9) & (nodes < 2.0 - 1e-9), axis=1))
        assert len(interior) == 1
        rng = np.random.default_rng(31)
        nodes[interior] += rng.uniform(-0.25, 0.25, size=(len(interior), 3))
        mesh = Mesh(nodes=nodes, hex8=mesh.hex8, node_sets=mesh.node_sets,
                    face_sets=mesh.face_sets)
        bnd = _all_boundary(mesh)
        mesh.node_sets["boundary"] = bnd

        A = np.array([[0.04, 0.015, 0.0],
                      [0.01, -0.02, 0.005],
                      [0.0, 0.008, 0.03]])
        model = FemModel(mesh, params,
                         dirichlet=[Dirichlet("boundary",
                                              value=lambda X: X @ A.T)])
        u, aux, _ = model.solve_step(np.zeros(model.n_dof), t=0.0, dt=0.0,
                                     tol=1e-10)
        u_exact = mesh.nodes @ A.T
        assert np.abs(u.reshape(-1, 3) - u_exact).max() < 1e-8
        # every Gauss point carries the same stress
        S = aux["S"].reshape(-1, 6)
        assert np.abs(S - S[0]).max() < 1e-8

    def test_single_element_matches_material_point(self):
        # uniaxial stretch with free lateral faces against the 0-d solver
        params = make_material()
        mesh = strip_mesh(1.0, 1.0, 1.0, 1, 1, 1)
        stretch, t_end = 1.12, 0.2
        model = FemModel(mesh, params, dirichlet=[
            Dirichlet("xmin", dofs=(0,)),
            Dirichlet("xmax", dofs=(0,), value=np.array([stretch - 1.0, 0, 0])),
            Dirichlet("ymin", dofs=(1,)),
            Dirichlet("zmin", dofs=(2,)),
        ])
        u, aux, _ = model.solve_step(np.zeros(model.n_dof), t=t_end, dt=t_end,
                                     tol=1e-12)

        program = LoadProgram(times=[0.0, t_end],
                              controls=([1.0, stretch], "free", "free"),
                              steps_per_interval=1)
        rec = solve_mixed_point(program, params)[-1]

        F = aux["F"].reshape(-1, 3, 3)
        assert np.abs(F - F[0]).max() < 1e-10          # homogeneous state
        assert F[0, 0, 0] == pytest.approx(stretch, abs=1e-12)
        assert F[0, 1, 1] == pytest.approx(rec.F[1, 1], abs=1e-10)
        assert F[0, 2, 2] == pytest.approx(rec.F[2, 2], abs=1e-10)
        S = aux["S"].reshape(-1, 6)
        assert np.abs(S - rec.S).max() < 1e-10
        assert np.abs(aux["rho"] - rec.rho).max() < 1e-12

    def test_unknown_sets_rejected(self):
        params = make_material()
        mesh = strip_mesh(1, 1, 1, 1, 1, 1)
        with pytest.raises(MeshError):
            FemModel(mesh, params, dirichlet=[Dirichlet("nope")])
        with pytest.raises(MeshError):
            FemModel(mesh, params, loads=[PressureLoad("nope", 1.0)])


class TestGlobalTangent:
    def _model(self, follower=True):
        params = make_material(kappa=0.1, psi_crit=2e-5)
        mesh = strip_mesh(2.0, 1.5, 1.0, 2, 2, 2)
        model = FemModel(mesh, params,
                         dirichlet=[Dirichlet("xmin"), Dirichlet("xmax")],
                         loads=[PressureLoad("bottom", 0.003,
                                             follower=follower)])
        rng = np.random.default_rng(41)
        model.rho = rng.uniform(0.5, 4.0, size=model.rho.shape)
        u = np.zeros(model.n_dof)
        u[model.free_idx] = 0.02 * rng.standard_normal(len(model.free_idx))
        u[model.fixed] = model.fixed_values[model.fixed]
        return model, u

    def test_tangent_matches_fd_with_growth_and_follower_load(self):
        model, u = self._model(follower=True)
        t, dt = 0.5, 0.1
        _, K, _ = model.assemble(u, t, dt)
        K = K.toarray()
        h = 1e-6
        fd = np.empty_like(K)
        for col, dof in enumerate(model.free_idx):
            up, um = u.copy(), u.copy()
            up[dof] += h
            um[dof] -= h
            Rp, _, _ = model.assemble(up, t, dt)
            Rm, _, _ = model.assemble(um, t, dt)
            fd[:, col] = (Rp - Rm)[model.free_idx] / (2 * h)
        assert rel_err(fd, K) < 1e-5

    def test_tangent_symmetric_without_follower_load(self):
        model, u = self._model(follower=False)
        _, K, _ = model.assemble(u, 0.5, 0.1)
        K = K.toarray()
        assert np.abs(K - K.T).max() < 1e-8 * np.abs(K).max()

    def test_reassembly_is_deterministic(self):
        model, u = self._model()
        R1, K1, _ = model.assemble(u, 0.5, 0.1)
        R2, K2, _ = model.assemble(u, 0.5, 0.1)
        assert np.array_equal(R1, R2)
        assert np.array_equal(K1.toarray(), K2.toarray())


class TestRampAndEnergy:
    def test_external_work_matches_stored_energy(self):
        # hyperelastic ramp: follower-load work equals the stored energy;
        # the plate is thick enough for plain equal-increment stepping
        params = make_material()
        model = clamped_strip_model(params, nx=6, ny=2, nz=1, length=8.0,
                                    width=3.0, thickness=1.0, pressure=0.0005)
        n_inc = 20
        u = np.zeros(model.n_dof)
        fext_prev = np.zeros(model.n_dof)
        work = 0.0
        for k in range(1, n_inc + 1):
            u_new, aux, _ = model.solve_step(u, t=0.0, dt=0.0,
                                             load_scale=k / n_inc)
            work += 0.5 * np.dot(aux["fext"] + fext_prev, u_new - u)
            u, fext_prev = u_new, aux["fext"]
        energy = model.total_energy(aux)
        assert energy == pytest.approx(work, rel=0.01)
        assert energy > 0.0

    def test_ramp_pressure_reaches_full_load(self):
        params = make_material()
        model = clamped_strip_model(params, nx=6, ny=2, nz=1, length=10.0,
                                    width=3.0, thickness=0.5, pressure=0.001)
        u, aux, _ = ramp_pressure(model)
        direct = model.assemble(u, 0.0, 0.0, load_scale=1.0)[0]
        assert np.abs(direct[model.free_idx]).max() < 1e-7
        assert u.reshape(-1, 3)[:, 2].max() > 0.01   # actually deflects up

    def test_dead_load_differs_from_follower(self):
        params = make_material()
        m1 = clamped_strip_model(params, nx=6, ny=2, nz=1, length=10.0,
                                 width=3.0, thickness=0.5, pressure=0.002)
        m2 = clamped_strip_model(params, nx=6, ny=2, nz=1, length=10.0,
                                 width=3.0, thickness=0.5, pressure=0.002,
                                 follower=False)
        u1, _, _ = ramp_pressure(m1)
        u2, _, _ = ramp_pressure(m2)
        d1 = np.abs(u1.reshape(-1, 3)[:, 2]).max()
        d2 = np.abs(u2.reshape(-1, 3)[:, 2]).max()
        assert d1 != pytest.approx(d2, rel=1e-6)


class TestMaturationMarch:
    def test_history_and_monotone_density(self):
        params = make_material(psi_crit=2e-5)
        model = clamped_strip_model(params, nx=5, ny=2, nz=1, length=10.0,
                                    width=3.0, thickness=0.4, pressure=0.002)
        seen = []
        history, u, aux = march_maturation(
            model, t_end=1.0, dt0=0.02, dt_max=0.5,
            on_step=lambda t, u, a, m: seen.append(t))
        times = [r.time for r in history]
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(1.0, abs=1e-9)
        assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))
        assert seen == times
        rho_means = [r.rho_mean for r in history]
        assert all(b >= a for a, b in zip(rho_means, rho_means[1:]))
        assert rho_means[-1] > 0.0
        assert np.all(model.rho >= 0.0)
        assert np.all(model.hist_strain >= 0.0)
        assert model.element_density().shape == (model.mesh.n_elems,)

    def test_committed_state_feeds_next_step(self):
        params = make_material(psi_crit=2e-5)
        model = clamped_strip_model(params, nx=4, ny=2, nz=1, length=8.0,
                                    width=3.0, thickness=0.4, pressure=0.002)
        u, aux, _ = ramp_pressure(model)
        model.commit(aux)
        u1, aux1, _ = model.solve_step(u, t=0.5, dt=0.5)
        model.commit(aux1)
        assert np.all(model.rho == aux1["rho"])
        u2, aux2, _ = model.solve_step(u1, t=1.0, dt=0.5)
        assert np.all(aux2["rho"] >= aux1["rho"] - 1e-15)

    def test_unloaded_march_matches_point_growth(self):
        # no load: every Gauss point follows the homogeneous growth curve
        from maturesim.matpoint import unloaded_maturation

        params = make_material()
        mesh = strip_mesh(1.0, 1.0, 1.0, 1, 1, 1)
        model = FemModel(mesh, params, dirichlet=[Dirichlet("xmin"),
                                                  Dirichlet("xmax")])
        history, _, _ = march_maturation(model, t_end=2.0, dt0=0.25,
                                         dt_max=0.25, dt_ratio=1.0)
        times, rhos = unloaded_maturation(params.growth, 2.0, 0.25)
        assert history[-1].rho_mean == pytest.approx(rhos[-1], rel=1e-12)
        assert history[-1].deflection == 0.0
