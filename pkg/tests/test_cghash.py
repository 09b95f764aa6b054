import numpy as np
import pytest

import colgenhash as cg
from colgenhash.cghash import (
    CGConfig,
    delta_h_matrix,
    dual_objective,
    recover_duals,
    solve_master,
    train_cghash,
)
from colgenhash.cli import serialize_model
from colgenhash.hashcore import HashFunction
from colgenhash.hashlearn import triplet_objective, DualWeights


def one_triplet_instance(delta):
    """1-d dataset and a single triplet whose delta-h under h(x)=[x>0.5] is +/-1."""
    if delta == 1:
        x = np.array([[0.0], [0.2], [1.0]])  # bits 0,0,1
    else:
        x = np.array([[0.0], [1.0], [0.2]])  # bits 0,1,0
    ds = cg.Dataset(x)
    ts = cg.TripletSet(np.array([[0, 1, 2]]))
    return ds, ts, [HashFunction(np.array([1.0]), -0.5)]


class TestSolveMaster:
    def test_closed_form_single_triplet(self):
        # min_w w + 2 (1 - w)^2 has optimum w* = 3/4, objective 7/8
        ds, ts, hashes = one_triplet_instance(+1)
        sol = solve_master(hashes, ts, ds, CGConfig(C=2.0, bits=1))
        assert sol.w[0] == pytest.approx(0.75, abs=1e-6)
        assert sol.objective == pytest.approx(0.875, abs=1e-8)
        assert sol.rho[0] == pytest.approx(sol.w[0])

    def test_empty_triplets(self):
        ds, _, hashes = one_triplet_instance(+1)
        sol = solve_master(hashes, cg.TripletSet(), ds, CGConfig(C=2.0, bits=1))
        assert sol.objective == 0.0
        np.testing.assert_array_equal(sol.w, [0.0])

    def test_regularizer_dominates_negative_column(self):
        # all deltas -1 and small C: adding weight only hurts, so w* = 0
        ds, ts, hashes = one_triplet_instance(-1)
        cfg = CGConfig(C=0.1, bits=1)
        sol = solve_master(hashes, ts, ds, cfg)
        grid = np.linspace(0, 5, 20001)
        scan = grid + cfg.C * np.maximum(1 + grid, 0) ** 2
        assert sol.objective == pytest.approx(scan.min(), abs=1e-8)
        assert sol.w[0] == pytest.approx(grid[scan.argmin()], abs=1e-6)

    def test_linf_box_respected(self):
        ds, ts, hashes = one_triplet_instance(+1)
        cfg = CGConfig(C=50.0, regularizer="linf", C_prime=0.25, bits=1)
        sol = solve_master(hashes, ts, ds, cfg)
        assert 0.0 <= sol.w[0] <= 0.25 + 1e-12
        assert sol.w[0] == pytest.approx(0.25, abs=1e-6)  # loss pushes to the box edge

    def test_margins_consistent(self):
        rng = np.random.default_rng(2)
        ds = cg.Dataset(rng.standard_normal((20, 3)))
        hashes = [HashFunction(rng.standard_normal(3), float(rng.standard_normal()))
                  for _ in range(4)]
        trips = np.stack([rng.choice(20, 3, replace=False) for _ in range(40)])
        ts = cg.TripletSet(trips)
        sol = solve_master(hashes, ts, ds, CGConfig(C=5.0, bits=4))
        np.testing.assert_allclose(sol.rho, delta_h_matrix(hashes, ts, ds) @ sol.w)


class TestRecoverDuals:
    def test_squared_hinge_active(self):
        d = recover_duals(np.array([[0, 1, 2]]), np.array([0.8]), "squared-hinge", 10.0)
        assert d.values[0] == pytest.approx(4.0)

    def test_squared_hinge_inactive(self):
        d = recover_duals(np.array([[0, 1, 2]]), np.array([1.5]), "squared-hinge", 10.0)
        assert d.values[0] == 0.0

    def test_logistic(self):
        d = recover_duals(np.array([[0, 1, 2]]), np.array([0.0]), "logistic", 10.0)
        assert d.values[0] == pytest.approx(5.0)

    def test_non_negative(self):
        rng = np.random.default_rng(0)
        rho = rng.normal(size=50) * 3
        trips = np.stack([rng.choice(30, 3, replace=False) for _ in range(50)])
        for loss in ("squared-hinge", "logistic"):
            assert np.all(recover_duals(trips, rho, loss, 2.0).values >= 0)

    def test_squared_hinge_zero_exactly_on_satisfied_margins(self):
        trips = np.array([[0, 1, 2], [0, 2, 1], [1, 0, 2]])
        rho = np.array([1.0, 2.0, 0.999])
        vals = recover_duals(trips, rho, "squared-hinge", 3.0).values
        assert vals[0] == 0.0 and vals[1] == 0.0 and vals[2] > 0


class TestDuality:
    def test_gap_vanishes_at_optimum(self):
        rng = np.random.default_rng(7)
        for loss in ("squared-hinge", "logistic"):
            for _ in range(5):
                ds = cg.Dataset(rng.standard_normal((25, 4)))
                hashes = [HashFunction(rng.standard_normal(4), float(rng.standard_normal()))
                          for _ in range(5)]
                trips = np.stack([rng.choice(25, 3, replace=False) for _ in range(60)])
                ts = cg.TripletSet(trips)
                cfg = CGConfig(loss=loss, C=3.0, bits=5)
                sol = solve_master(hashes, ts, ds, cfg)
                dual = dual_objective(sol.duals.values, loss, cfg.C)
                assert abs(sol.objective - dual) <= 1e-4 * (1 + abs(sol.objective))


class TestColumnSelection:
    def exact_subproblem(self, ds, mu):
        xs = np.sort(np.unique(ds.x[:, 0]))
        cuts = (xs[:-1] + xs[1:]) / 2
        best, best_obj = None, -np.inf
        for c in cuts:
            for s in (1.0, -1.0):
                h = HashFunction(np.array([s]), -s * c)
                obj = triplet_objective(h, mu, ds)
                if obj > best_obj:
                    best, best_obj = h, obj
        return best, best_obj

    def test_new_column_beats_working_set(self):
        # with an exact subproblem, each new column's dual score must be at
        # least that of every column already in the working set
        rng = np.random.default_rng(11)
        for _ in range(10):
            ds = cg.Dataset(rng.uniform(size=(12, 1)))
            trips = np.stack([rng.choice(12, 3, replace=False) for _ in range(30)])
            ts = cg.TripletSet(trips)
            mu = DualWeights(trips, np.full(30, 1.0 / 30))
            hashes = []
            cfg = CGConfig(C=4.0, bits=4)
            for _round in range(4):
                h, best_obj = self.exact_subproblem(ds, mu)
                for prev in hashes:
                    assert best_obj >= triplet_objective(prev, mu, ds) - 1e-12
                hashes.append(h)
                sol = solve_master(hashes, ts, ds, cfg)
                mu = sol.duals
                if not np.any(mu.values > 0):
                    break


class TestTrainCGHash:
    def small_problem(self):
        ds = cg.synth_clusters(3, 4, 3, 12, 0.45)
        nb = cg.build_neighborhoods(ds, "label", 4, 8, seed=2)
        ts = cg.generate_triplets(nb)
        return cg.Dataset(ds.x), ts

    def test_objectives_non_increasing(self):
        ds, ts = self.small_problem()
        hist = []
        train_cghash(ds, ts, CGConfig(bits=6, C=5.0), seed=1, callback=hist.append)
        objs = [h["master_objective"] for h in hist]
        assert len(objs) >= 2
        assert all(objs[i + 1] <= objs[i] + 1e-9 for i in range(len(objs) - 1))

    def test_single_bit_shape(self):
        ds, ts = self.small_problem()
        model = train_cghash(ds, ts, CGConfig(bits=1, C=5.0), seed=1)
        assert model.bits == 1
        assert model.weights.shape == (1,) and model.weights[0] >= 0

    def test_deterministic_serialization(self):
        ds, ts = self.small_problem()
        a = train_cghash(ds, ts, CGConfig(bits=4, C=5.0), seed=9)
        b = train_cghash(ds, ts, CGConfig(bits=4, C=5.0), seed=9)
        assert serialize_model(a) == serialize_model(b)

    def test_empty_triplets_rejected(self):
        ds, _ = self.small_problem()
        with pytest.raises(ValueError):
            train_cghash(ds, cg.TripletSet(), CGConfig(bits=2), seed=0)

    def test_logistic_loss_trains(self):
        ds, ts = self.small_problem()
        hist = []
        model = train_cghash(ds, ts, CGConfig(bits=3, C=5.0, loss="logistic"),
                             seed=1, callback=hist.append)
        assert model.bits >= 1
        for h in hist:
            assert abs(h["master_objective"] - h["dual_objective"]) <= 1e-4 * (
                1 + abs(h["master_objective"])
            )

    def test_linf_trains_within_box(self):
        ds, ts = self.small_problem()
        model = train_cghash(
            ds, ts, CGConfig(bits=3, C=5.0, regularizer="linf", C_prime=0.5), seed=1
        )
        assert np.all(model.weights <= 0.5 + 1e-9)
