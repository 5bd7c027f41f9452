import json
import math

import numpy as np
import pytest

from daviesgap.blocks import (
    all_block_gaps,
    block_exact_gap,
    bohr_index,
    dirichlet_block,
    pauli_generator,
    variance_block,
)
from daviesgap.bounds import (
    BoundReport,
    classical_factorization,
    combined_bound,
    compute_report,
    gershgorin_pairs,
    lambda_qm_gershgorin,
    lambda_qm_tree,
    mixing_time_bound,
    support_number,
    tau0_canonical,
    tau0_congestion_dilation,
    tree_block_bounds,
    tree_factorization,
)
from daviesgap.errors import (
    DegenerateNormalization,
    InvalidArguments,
    KernelMismatch,
    NoValidBound,
)
from daviesgap.graphs import build_graph, canonical_paths, spanning_tree
from daviesgap.model import gibbs, load_system
from daviesgap.systems import (
    make_counterexample,
    make_d_level,
    make_oscillator,
    make_particle_line,
)

from conftest import random_spec


def rand_psd(rng, n, rank=None):
    r = rank or n
    x = rng.normal(size=(n, r))
    return x @ x.T


def classical_pieces(spec):
    w = gibbs(spec)
    idx = bohr_index(spec)
    pg = pauli_generator(spec, w, idx)
    db0 = dirichlet_block(spec, w, idx, 0.0)
    g0 = build_graph(db0)
    cp = canonical_paths(g0)
    return w, idx, pg, db0, g0, cp


class TestSupportNumber:
    def test_identity_pencil(self, rng):
        for _ in range(5):
            a = rand_psd(rng, 5)
            assert abs(support_number(a, a) - 1.0) < 1e-10

    def test_scaling(self, rng):
        b = rand_psd(rng, 4)
        assert abs(support_number(2.0 * b, b) - 2.0) < 1e-10
        # scaling B by c scales tau by 1/c
        a = rand_psd(rng, 4)
        t1 = support_number(a, b)
        t2 = support_number(a, 3.0 * b)
        assert abs(t2 - t1 / 3.0) <= 1e-9 * t1

    def test_splitting_lemma(self, rng):
        # tau(Sum A_i, Sum B_i) <= max_i tau(A_i, B_i) on random PSD splittings
        for _ in range(100):
            n = int(rng.integers(2, 6))
            q = int(rng.integers(2, 5))
            a_parts = [rand_psd(rng, n) for _ in range(q)]
            b_parts = [rand_psd(rng, n) for _ in range(q)]
            lhs = support_number(sum(a_parts), sum(b_parts))
            rhs = max(support_number(a, b) for a, b in zip(a_parts, b_parts))
            assert lhs <= rhs * (1 + 1e-8)

    def test_kernel_mismatch(self, rng):
        a = rand_psd(rng, 4)
        b = rand_psd(rng, 4, rank=2)
        with pytest.raises(KernelMismatch):
            support_number(a, b)

    def test_block_gap_is_support_reciprocal(self, rng):
        spec = random_spec(rng, 5, 1.0, ladder=True)
        w = gibbs(spec)
        idx = bohr_index(spec)
        for gi in (idx.zero_index, idx.zero_index + 1):
            nu = float(idx.freqs[gi])
            db = dirichlet_block(spec, w, idx, nu)
            vb = variance_block(w, idx, nu)
            tau = support_number(vb.matrix, db.matrix)
            gap = block_exact_gap(db, vb)
            assert abs(tau * gap - 1.0) < 1e-8


class TestTau0:
    def test_complete_graph_uniform(self):
        # uniform sigma = 1/N and uniform rates p: tau0 = 1/(p N), evaluated
        # both by hand and by brute force on N = 4
        n = 4
        spec = make_counterexample(n, 1.3, 0.0)
        w, idx, pg, db0, g0, cp = classical_pieces(spec)
        p = pg.rates[1, 0]
        assert np.allclose(pg.rates[~np.eye(n, dtype=bool)], p)
        got = tau0_canonical(pg, w, cp)
        assert abs(got - 1.0 / (p * n)) < 1e-12
        # brute force: max over edges of load / Q
        brute = 0.0
        for a in range(n):
            for b in range(a + 1, n):
                brute = max(brute, (w.sigma[a] * w.sigma[b]) / (p * w.sigma[b]))
        assert abs(got - brute) < 1e-14

    def test_oscillator_within_analytic_envelope(self):
        d_levels, k = 12, 1.0
        spec = make_oscillator(d_levels, 1.0, k)
        w, idx, pg, db0, g0, cp = classical_pieces(spec)
        tau = tau0_canonical(pg, w, cp)
        assert tau <= 2.0 * d_levels * (1.0 + math.exp(k)) / math.exp(k)
        assert 1.0 / tau <= block_exact_gap(db0, variance_block(w, idx, 0.0)) * (
            1 + 1e-9
        )

    def test_particle_line_direct_edge_formula(self):
        n, k = 8, 0.5
        spec = make_particle_line(n, 1.0, 0.0, k)
        w, idx, pg, db0, g0, cp = classical_pieces(spec)
        tau = tau0_canonical(pg, w, cp)
        # K^0 = E^0, |gamma| = 1: tau0 = max sigma_a sigma_b / (P(a,b) sigma_b)
        brute = max(
            w.sigma[a] * w.sigma[b] / (pg.rates[a, b] * w.sigma[b])
            for a in range(n)
            for b in range(a + 1, n)
        )
        assert abs(tau - brute) < 1e-12


class TestGershgorin:
    def test_oscillator_asymptotics(self):
        d_levels = 50
        spec = make_oscillator(d_levels, 1.0, 1.0)
        w = gibbs(spec)
        idx = bohr_index(spec)
        val = lambda_qm_gershgorin(idx, spec, w)
        assert abs(val - 1.0 / (8 * d_levels)) <= 0.2 / (8 * d_levels)

    def test_particle_line_size_free_bound(self):
        n, k = 8, 0.3
        spec = make_particle_line(n, 1.0, 0.0, k)
        w = gibbs(spec)
        idx = bohr_index(spec)
        val = lambda_qm_gershgorin(idx, spec, w)
        assert val >= 0.5 / (1.0 + math.exp(4 * k))

    def test_d_level_degenerates_to_zero(self):
        spec = make_d_level(9, 1.0, 1.0)
        w = gibbs(spec)
        idx = bohr_index(spec)
        assert lambda_qm_gershgorin(idx, spec, w) == 0.0

    def test_exact_for_singleton_blocks(self, rng):
        # random non-degenerate spectrum: every nu > 0 block is 1x1 and the
        # per-pair value equals the block gap when the coupling diagonals
        # share signs; soundness holds regardless
        spec = random_spec(rng, 6, 1.1, n_alpha=1)
        w = gibbs(spec)
        idx = bohr_index(spec)
        pairs = gershgorin_pairs(idx, spec, w)
        gaps = all_block_gaps(spec, w, idx)
        for gi in idx.positive_indices():
            group = idx.groups[gi]
            assert len(group) == 1
            m1, m2 = map(int, group[0])
            nu = float(idx.freqs[gi])
            assert pairs[(m1, m2)] <= gaps[nu] * (1 + 1e-9)


class TestTau0Hat:
    def test_two_level_equals_support_number(self, rng):
        spec = load_system(
            {
                "energies": [0.0, 1.0],
                "couplings": [{"re": [[0.2, 0.9], [0.9, -0.4]],
                               "im": [[0.0, 0.0], [0.0, 0.0]]}],
                "beta": 0.8,
                "bath": {"kind": "glauber", "params": {}},
            }
        )
        w, idx, pg, db0, g0, cp = classical_pieces(spec)
        tau_hat = tau0_congestion_dilation(pg, w, cp)
        vb0 = variance_block(w, idx, 0.0)
        exact = support_number(vb0.matrix, np.real(db0.matrix))
        assert abs(tau_hat - exact) <= 1e-10 * exact

    def test_complete_graph_collapses_to_tau0(self):
        spec = make_counterexample(5, 1.1, 0.0)
        w, idx, pg, db0, g0, cp = classical_pieces(spec)
        assert abs(
            tau0_congestion_dilation(pg, w, cp) - tau0_canonical(pg, w, cp)
        ) < 1e-12

    def test_oscillator_validity(self):
        spec = make_oscillator(10, 1.0, 1.0)
        w, idx, pg, db0, g0, cp = classical_pieces(spec)
        lam_cl = block_exact_gap(db0, variance_block(w, idx, 0.0))
        assert tau0_congestion_dilation(pg, w, cp) >= 1.0 / lam_cl * (1 - 1e-9)


class TestLambdaQmTree:
    def test_singleton_block_value(self, rng):
        # |nu-set| = 1: the factorization is exact, so the bound equals the
        # block gap phi / sigma(m1, m2)
        spec = random_spec(rng, 5, 0.9, n_alpha=1)
        w = gibbs(spec)
        idx = bohr_index(spec)
        for gi in idx.positive_indices():
            nu = float(idx.freqs[gi])
            db = dirichlet_block(spec, w, idx, nu)
            if db.size != 1:
                continue
            tree = spanning_tree(build_graph(db))
            val = tree_block_bounds([db], [tree])[nu]
            exact = block_exact_gap(db, variance_block(w, idx, nu))
            assert val == pytest.approx(float(db.phi[0] / db.sigma_pairs[0]))
            assert val <= exact * (1 + 1e-9)

    def test_degenerate_normalization(self):
        # coupling supported only on levels {0, 2} with equal diagonals at
        # {1, 3}: the nu = 3 block is identically zero
        doc = {
            "energies": [0.0, 1.0, 2.0, 4.0],
            "couplings": [
                {
                    "re": [
                        [0.0, 0.0, 1.0, 0.0],
                        [0.0, 0.0, 0.0, 0.0],
                        [1.0, 0.0, 0.3, 0.0],
                        [0.0, 0.0, 0.0, 0.0],
                    ],
                    "im": [[0.0] * 4 for _ in range(4)],
                }
            ],
            "beta": 0.6,
            "bath": {"kind": "glauber", "params": {}},
        }
        spec = load_system(doc)
        w = gibbs(spec)
        idx = bohr_index(spec)
        blocks, trees = [], []
        for gi in idx.positive_indices():
            db = dirichlet_block(spec, w, idx, float(idx.freqs[gi]))
            blocks.append(db)
            trees.append(spanning_tree(build_graph(db)))
        with pytest.raises(DegenerateNormalization):
            lambda_qm_tree(blocks, trees, w)
        report = compute_report(spec, with_full_oracle=False)
        assert "lambda_qm_tree" in report.errors
        assert report.lambda_qm_tree is None

    def test_d_level_closed_form_inequality(self):
        d, k = 16, 1.0
        report = compute_report(make_d_level(d, 1.0, k), with_full_oracle=False)
        closed_form = math.exp(-k) * (1.0 - math.exp(-k)) / d
        assert report.lambda_qm_tree >= closed_form * 0.99
        assert report.lambda_qm_tree <= report.lambda_qm_exact * (1 + 1e-9)


class TestFactorizations:
    def test_classical_identities(self, rng):
        for _ in range(5):
            spec = random_spec(rng, int(rng.integers(3, 7)), float(rng.uniform(0, 2)))
            w, idx, pg, db0, g0, cp = classical_pieces(spec)
            a_mat, u_mat, w_mat = classical_factorization(pg, w, cp, g0)
            vb0 = variance_block(w, idx, 0.0)
            assert np.abs(a_mat @ a_mat.T - np.real(db0.matrix)).max() < 1e-12
            assert np.abs(u_mat @ u_mat.T - vb0.matrix).max() < 1e-14
            assert (
                np.linalg.norm(a_mat @ w_mat - u_mat)
                <= 1e-10 * np.linalg.norm(u_mat)
            )
            tau = support_number(vb0.matrix, np.real(db0.matrix))
            assert np.linalg.norm(w_mat) ** 2 >= tau * (1 - 1e-9)

    def test_tree_identities(self, rng):
        count = 0
        for trial in range(6):
            spec = random_spec(rng, int(rng.integers(4, 8)),
                               float(rng.uniform(0, 2)), ladder=True)
            w = gibbs(spec)
            idx = bohr_index(spec)
            for gi in idx.positive_indices():
                nu = float(idx.freqs[gi])
                db = dirichlet_block(spec, w, idx, nu)
                tree = spanning_tree(build_graph(db))
                a_mat, u_mat, w_mat = tree_factorization(db, tree)
                scale = np.linalg.norm(u_mat)
                assert np.abs(a_mat @ a_mat.conj().T - db.matrix).max() < 1e-12
                assert np.linalg.norm(a_mat @ w_mat - u_mat) <= 1e-10 * scale
                vb = variance_block(w, idx, nu)
                tau = support_number(vb.matrix, db.matrix)
                assert np.linalg.norm(w_mat) ** 2 >= tau * (1 - 1e-9)
                # Frobenius norm reproduces the reported bound
                lam_hat = tree_block_bounds([db], [tree])[nu]
                assert abs(1.0 / np.linalg.norm(w_mat) ** 2 - lam_hat) <= 1e-9 * lam_hat
                count += 1
        assert count > 10


class TestCombined:
    def test_d_level_uses_robust(self):
        report = compute_report(make_d_level(8, 1.0, 1.0), with_full_oracle=False)
        assert report.lambda_qm_gersh == 0.0
        assert report.bound_main is None
        assert report.bound_robust is not None
        assert report.lambda_lower == report.bound_robust

    def test_oscillator_uses_both(self):
        report = compute_report(make_oscillator(8, 1.0, 1.0), with_full_oracle=False)
        assert report.bound_main is not None and report.bound_robust is not None
        assert report.lambda_lower == max(report.bound_main, report.bound_robust)

    def test_counterexample_exact_blocks(self):
        n = 6
        report = compute_report(make_counterexample(n, math.sqrt(2.0), 0.0))
        assert report.lambda_cl_exact == pytest.approx(1.0, abs=1e-12)
        assert report.lambda_qm_exact == pytest.approx(1.0 / n, abs=1e-12)
        assert min(report.lambda_cl_exact, report.lambda_qm_exact) == pytest.approx(
            report.lambda_exact, rel=1e-8
        )

    def test_no_valid_bound(self):
        with pytest.raises(NoValidBound):
            combined_bound(tau0=1.0, lambda_qm_gersh=0.0, tau0_hat=None,
                           lambda_qm_tree=None)

    def test_report_bounds_below_exact(self, rng):
        for ladder in (False, True):
            spec = random_spec(rng, 6, float(rng.uniform(0, 2)), ladder=ladder)
            report = compute_report(spec)
            lam = report.lambda_exact
            for name in ("bound_main", "bound_robust", "lambda_lower"):
                value = getattr(report, name)
                if value is not None:
                    assert value <= lam * (1 + 1e-9) + 1e-9

    def test_report_serialization(self):
        report = compute_report(make_oscillator(6, 1.0, 0.5))
        payload = json.loads(report.to_json())
        assert payload["dim"] == 7
        assert payload["lambda_lower"] is not None
        assert "block_gaps" in payload and "edge_loads" in payload


class TestMixingTime:
    def test_direct_value(self):
        # log(200) / 2 for lambda = 1, sigma_min = 1/2, epsilon = 0.1
        got = mixing_time_bound(1.0, 0.5, 0.1)
        assert got == pytest.approx(math.log(200.0) / 2.0, rel=1e-12)

    def test_limit_to_zero(self):
        # sigma_min^{-1}/eps^2 -> 1 only as eps -> 1 with sigma_min = 1
        assert mixing_time_bound(1.0, 1.0, 1.0 - 1e-12) == pytest.approx(0.0, abs=1e-9)

    def test_invalid_arguments(self):
        for args in ((0.0, 0.5, 0.1), (1.0, 0.5, 1.5), (1.0, 0.0, 0.1),
                     (1.0, 2.0, 0.1), (-1.0, 0.5, 0.1)):
            with pytest.raises(InvalidArguments):
                mixing_time_bound(*args)

    def test_report_mixing_time(self):
        report = compute_report(make_oscillator(6, 1.0, 1.0), with_full_oracle=False)
        t = report.mixing_time(0.1)
        expect = mixing_time_bound(report.lambda_lower, report.sigma_min, 0.1)
        assert t == expect


class TestOracleLimits:
    def test_block_oracle_skipped_above_limit(self, rng):
        spec = random_spec(rng, 6, 0.5)
        report = compute_report(spec, with_bounds=False, with_full_oracle=False,
                                block_limit=4)
        assert report.block_gaps is None
        assert report.lambda_cl_exact is None and report.errors == {}

    def test_diameter_audit_field(self, rng):
        report = compute_report(random_spec(rng, 5, 0.5), with_bounds=False,
                                with_full_oracle=False)
        assert report.bohr_diameter_max is not None
        assert report.bohr_diameter_max >= 0.0
        assert "bohr_diameter_max" in report.to_dict()
