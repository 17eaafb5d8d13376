"""Sign/permutation conjugation: plans, hatted tensors, expectations, recursion."""

import numpy as np
import pytest

from randbc import (
    DOUBLE,
    SINGLE,
    RandomizationPlan,
    RecursivePlan,
    apply_bc,
    decimal_mode,
    draw_plan,
    draw_recursive_plan,
    enumerate_expectation,
    hatted_tensors,
    identity_plan,
    identity_recursive_plan,
    kappa,
    plan_count,
    plan_matrices,
    randomized_apply,
    recursive_apply,
    recursive_randomized_apply,
    recursive_randomized_apply_many,
    standard_formula,
    variant_plan,
)
from randbc import _engine
from randbc.rng import derive_rng

from conftest import oracle_sandwich, rel_err, scaled_w


class TestPlans:
    def test_identity_plan(self):
        p = identity_plan(3)
        assert np.all(p.signs == 1.0)
        assert np.array_equal(p.perms, np.tile(np.arange(3), (3, 1)))
        assert p.n == 3

    def test_validation(self):
        good_s = np.ones((3, 2))
        good_p = np.tile(np.arange(2), (3, 1))
        with pytest.raises(ValueError):
            RandomizationPlan(np.ones((2, 2)), good_p)
        with pytest.raises(ValueError):
            RandomizationPlan(good_s * 0.5, good_p)
        with pytest.raises(ValueError):
            RandomizationPlan(good_s, np.zeros((3, 2), dtype=int))

    def test_draw_deterministic(self):
        a = draw_plan(3, derive_rng(5))
        b = draw_plan(3, derive_rng(5))
        assert np.array_equal(a.signs, b.signs)
        assert np.array_equal(a.perms, b.perms)

    def test_draw_structure(self):
        p = draw_plan(4, derive_rng(6))
        assert set(np.unique(p.signs)) <= {-1.0, 1.0}
        for row in p.perms:
            assert sorted(row) == list(range(4))

    def test_variants(self):
        p = draw_plan(3, derive_rng(7))
        ident = identity_plan(3)
        full = variant_plan(p, "full")
        sign = variant_plan(p, "sign")
        perm = variant_plan(p, "perm")
        none = variant_plan(p, "none")
        assert full is p
        assert np.array_equal(sign.signs, p.signs) and np.array_equal(sign.perms, ident.perms)
        assert np.array_equal(perm.signs, ident.signs) and np.array_equal(perm.perms, p.perms)
        assert np.array_equal(none.signs, ident.signs) and np.array_equal(none.perms, ident.perms)
        with pytest.raises(ValueError):
            variant_plan(p, "both")

    def test_recursive_plan(self):
        rp = draw_recursive_plan(2, 3, derive_rng(8))
        assert rp.depth == 3 and rp.n == 2
        flat = [np.concatenate([p.signs.ravel(), p.perms.ravel()]) for p in rp.levels]
        assert not all(np.array_equal(flat[0], f) for f in flat[1:])
        again = draw_recursive_plan(2, 3, derive_rng(8))
        assert all(np.array_equal(a.signs, b.signs) and np.array_equal(a.perms, b.perms)
                   for a, b in zip(rp.levels, again.levels))

    def test_recursive_plan_validation(self):
        with pytest.raises(ValueError):
            RecursivePlan(())
        with pytest.raises(ValueError):
            RecursivePlan((identity_plan(2), identity_plan(3)))

    def test_plan_count(self):
        assert plan_count(2) == 512
        assert plan_count(3) == 110592

    def test_draw_uniformity_chi_square(self):
        # n = 2: 512 equally likely plans; encode each draw into 9 bits
        draws = 1_000_000
        g = derive_rng(2024)
        counts = np.zeros(512, dtype=np.int64)
        for _ in range(draws):
            p = draw_plan(2, g)
            bits = (p.signs.ravel() < 0).astype(np.int64)
            code = 0
            for b in bits:
                code = code * 2 + int(b)
            for row in p.perms:
                code = code * 2 + int(row[0])
            counts[code] += 1
        expected = draws / 512.0
        sigma = np.sqrt(expected)
        assert np.all(np.abs(counts - expected) < 5.0 * sigma)
        chi2 = float(np.sum((counts - expected) ** 2) / expected)
        # chi-square with 511 dof: mean 511, sd ~32; 5 sd window
        assert 351.0 < chi2 < 671.0


class TestHattedTensors:
    def test_identity_plan_fixes_exact_formula(self, strassen):
        uh, vh, wh = hatted_tensors(strassen, identity_plan(2))
        assert np.array_equal(uh, strassen.u)
        assert np.array_equal(vh, strassen.v)
        assert np.array_equal(wh, strassen.w)

    def test_rescaled_false_drops_factor(self, perturbed):
        plan = draw_plan(2, derive_rng(9))
        _, _, wh = hatted_tensors(perturbed, plan, rescaled=True)
        uh0, vh0, wh0 = hatted_tensors(perturbed, plan, rescaled=False)
        c = 1.0 / (1.0 - kappa(perturbed))
        assert np.array_equal(wh, wh0 * c)
        uh, vh, _ = hatted_tensors(perturbed, plan, rescaled=True)
        assert np.array_equal(uh, uh0) and np.array_equal(vh, vh0)

    def test_index_and_sign_action(self, perturbed):
        plan = draw_plan(2, derive_rng(10))
        s1, s2, s3 = plan.signs
        p1, p2, p3 = plan.perms
        uh, vh, wh = hatted_tensors(perturbed, plan, rescaled=False)
        for r in range(perturbed.rank):
            for k in range(2):
                for l in range(2):
                    assert uh[r, k, l] == perturbed.u[r, p1[k], p2[l]] * s1[k] * s2[l]
                    assert vh[r, k, l] == perturbed.v[r, p2[k], p3[l]] * s2[k] * s3[l]
                    assert wh[r, k, l] == perturbed.w[r, p1[k], p3[l]] * s1[k] * s3[l]

    def test_kappa_one_rejected(self, strassen):
        dead = scaled_w(strassen, 0.0)
        with pytest.raises(ValueError):
            hatted_tensors(dead, identity_plan(2))

    def test_grid_mismatch(self, strassen):
        with pytest.raises(ValueError):
            hatted_tensors(strassen, identity_plan(3))


class TestPlanMatrices:
    def test_orthogonal_and_signed(self):
        plan = draw_plan(3, derive_rng(11))
        for m in (1, 2):
            for M in plan_matrices(plan, m):
                assert M.shape == (3 * m, 3 * m)
                assert np.array_equal(M @ M.T, np.eye(3 * m))
                assert set(np.unique(np.abs(M))) <= {0.0, 1.0}

    def test_block_structure(self):
        plan = draw_plan(2, derive_rng(12))
        M1 = plan_matrices(plan, 2)[0]
        j = 1
        pi = int(plan.perms[0][j])
        block = M1[pi * 2:(pi + 1) * 2, j * 2:(j + 1) * 2]
        assert np.array_equal(block, plan.signs[0][j] * np.eye(2))


class TestRandomizedApply:
    def test_matches_sandwich_oracle(self, perturbed):
        rng = derive_rng(13)
        for m in (1, 2):
            A = rng.normal(size=(2 * m, 2 * m))
            B = rng.normal(size=(2 * m, 2 * m))
            for t in range(5):
                plan = draw_plan(2, derive_rng(13, t))
                got = randomized_apply(perturbed, plan, A, B)
                assert rel_err(got, oracle_sandwich(perturbed, plan, A, B)) < 1e-12

    def test_identity_plan_is_plain_apply(self, strassen, perturbed):
        rng = derive_rng(23)
        A = rng.normal(size=(2, 2))
        B = rng.normal(size=(2, 2))
        # exact formula: rescale factor is exactly 1, results agree bitwise
        got = randomized_apply(strassen, identity_plan(2), A, B)
        assert np.array_equal(got, apply_bc(strassen, A, B))
        # inexact formula: same up to the one folded scaling per level
        got = randomized_apply(perturbed, identity_plan(2), A, B)
        ref = apply_bc(perturbed, A, B) / (1.0 - kappa(perturbed))
        assert rel_err(got, ref) < 1e-14

    def test_exact_formula_randomized_still_multiplies(self, strassen):
        rng = derive_rng(24)
        A = rng.normal(size=(4, 4))
        B = rng.normal(size=(4, 4))
        plan = draw_plan(2, rng)
        assert rel_err(randomized_apply(strassen, plan, A, B), A @ B) < 1e-13

    def test_stats_counter(self, strassen):
        stats = {}
        A = np.eye(2)
        randomized_apply(strassen, draw_plan(2, derive_rng(25)), A, A, DOUBLE, stats)
        assert stats["leaf_multiplies"] == 7


class TestRecursiveRandomized:
    @pytest.mark.parametrize("mode", [DOUBLE, SINGLE, decimal_mode(2)], ids=lambda m: m.label)
    def test_depth_one_is_single_level(self, perturbed, mode):
        rng = derive_rng(26)
        A = mode.array(rng.normal(size=(2, 2)))
        B = mode.array(rng.normal(size=(2, 2)))
        plan = draw_plan(2, derive_rng(26, 1))
        got = recursive_randomized_apply(perturbed, RecursivePlan((plan,)), A, B, mode)
        ref = randomized_apply(perturbed, plan, A, B, mode)
        assert np.array_equal(mode.to_double(got), mode.to_double(ref))

    def test_exact_formula_deep_recursion(self, strassen):
        rng = derive_rng(27)
        A = rng.normal(size=(8, 8))
        B = rng.normal(size=(8, 8))
        rp = draw_recursive_plan(2, 3, derive_rng(27, 1))
        got = recursive_randomized_apply(strassen, rp, A, B)
        assert rel_err(got, A @ B) < 1e-10

    def test_per_level_scaling_law(self, perturbed):
        # running the engine on unscaled hatted tensors and rescaling the
        # output by (1 - kappa)^-Q reproduces the per-level folded scaling
        rng = derive_rng(28)
        A = rng.normal(size=(4, 4))
        B = rng.normal(size=(4, 4))
        rp = draw_recursive_plan(2, 2, derive_rng(28, 1))
        got = recursive_randomized_apply(perturbed, rp, A, B)
        levels = []
        for p in rp.levels:
            uh, vh, wh = hatted_tensors(perturbed, p, rescaled=False)
            levels.append((uh[None], vh[None], wh[None]))
        raw = _engine.apply_levels(levels, A[None], B[None], DOUBLE)[0]
        c = 1.0 / (1.0 - kappa(perturbed))
        assert rel_err(got, raw * c ** 2) < 1e-13

    def test_identity_recursive_plan_matches_deterministic(self, strassen):
        rng = derive_rng(29)
        A = rng.normal(size=(8, 8))
        B = rng.normal(size=(8, 8))
        got = recursive_randomized_apply(strassen, identity_recursive_plan(2, 3), A, B)
        assert np.array_equal(got, recursive_apply(strassen, A, B, 3))

    def test_leaf_counts(self, strassen):
        stats = {}
        A = np.eye(8)
        rp = draw_recursive_plan(2, 3, derive_rng(30))
        recursive_randomized_apply(strassen, rp, A, A, DOUBLE, stats)
        assert stats["leaf_multiplies"] == 7 ** 3

    def test_many_matches_singles_bitwise(self, perturbed):
        rng = derive_rng(32)
        A = np.asarray(SINGLE.array(rng.normal(size=(4, 4))))
        B = np.asarray(SINGLE.array(rng.normal(size=(4, 4))))
        rplans = [draw_recursive_plan(2, 2, derive_rng(32, t)) for t in range(7)]
        # chunk_elements small enough to force several flushes
        stack = recursive_randomized_apply_many(perturbed, rplans, A, B, SINGLE,
                                                chunk_elements=64)
        assert stack.shape == (7, 4, 4)
        for t, rp in enumerate(rplans):
            one = recursive_randomized_apply(perturbed, rp, A, B, SINGLE)
            assert np.array_equal(stack[t], one)

    def test_many_validation(self, perturbed):
        A = np.eye(4)
        with pytest.raises(ValueError):
            recursive_randomized_apply_many(perturbed, [], A, A)
        mixed = [draw_recursive_plan(2, 1, derive_rng(33)),
                 draw_recursive_plan(2, 2, derive_rng(34))]
        with pytest.raises(ValueError):
            recursive_randomized_apply_many(perturbed, mixed, A, A)


class TestEnumerateExpectation:
    def test_exact_formula_unbiased(self, strassen):
        rng = derive_rng(35)
        A = rng.normal(size=(2, 2))
        B = rng.normal(size=(2, 2))
        E = enumerate_expectation(strassen, A, B)
        assert rel_err(E, A @ B) < 1e-13

    def test_blocked_unbiased(self, strassen):
        rng = derive_rng(36)
        A = rng.normal(size=(4, 4))
        B = rng.normal(size=(4, 4))
        assert rel_err(enumerate_expectation(strassen, A, B), A @ B) < 1e-13

    def test_two_digit_expectation_frozen(self, strassen):
        # near-identity input again: the enumerated two-digit expectation is
        # biased away from the true product by the same amount with and
        # without the column reversal
        m = decimal_mode(2)
        A = np.array([[0.99, 0.001], [0.001, 0.99]])
        E = m.to_double(enumerate_expectation(strassen, A, A, m))
        assert np.linalg.norm(E - A @ A) == pytest.approx(0.002364212580325842, rel=1e-12)
        R = A[:, ::-1]
        Er = m.to_double(enumerate_expectation(strassen, R, R, m))
        assert np.linalg.norm(Er - R @ R) == pytest.approx(0.002364212580325842, rel=1e-12)

    def test_budget(self):
        f4 = standard_formula(4)
        A = np.eye(4)
        with pytest.raises(ValueError):
            enumerate_expectation(f4, A, A)

    def test_chunking_neutral(self, strassen):
        rng = derive_rng(37)
        A = rng.normal(size=(2, 2))
        B = rng.normal(size=(2, 2))
        big = enumerate_expectation(strassen, A, B, SINGLE)
        small = enumerate_expectation(strassen, A, B, SINGLE, chunk_elements=16)
        assert np.array_equal(big, small)
