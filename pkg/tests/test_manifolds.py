import json
import math

import numpy as np
import pytest

from spectra import manifolds as mf
from spectra.perm_core import Partition, partition_of_point
from spectra.spectral import lift_point, random_orthogonal
from spectra.spectral_fn import Polynomial
from spectra.strata import Stratum, contains, in_perpperp
from spectra.verify import builtin_manifolds, negative_control_manifold

P = Partition
DIAG_LINE = mf.affine_perpperp(P([[1, 2]]), [1.0, 1.0])


# descriptors ----------------------------------------------------------------


def test_builder_defaults():
    S = mf.stratum(P([[1, 2], [3]]))
    assert S.base_point.tolist() == [2, 2, 1] and S.d == 2
    C = mf.constant_support(4, 2)
    assert C.base_point.tolist() == [2, 1, 0, 0] and C.zero_indices == (3, 4)
    Sp = mf.sphere_in_perpperp(Partition.discrete(3), 0.0, math.sqrt(14), [3.0, 2.0, 1.0])
    assert Sp.d == 2 and Sp.contains([1.0, -2.0, -3.0])


@pytest.mark.parametrize("bad", [
    lambda: mf.stratum(P([[1, 2], [3]]), [1.0, 1.0, 1.0]),
    lambda: mf.affine_perpperp(P([[1, 2]]), [1.0, 2.0]),
    lambda: mf.affine_perpperp(P([[1], [2]]), [1.0, 2.0]),
    lambda: mf.constant_support(3, 2, [1.0, 0.0, 0.0]),
    lambda: mf.sphere_in_perpperp(P([[1, 2]]), 0.0, 1.0),
    lambda: mf.sphere_in_perpperp(Partition.discrete(2), [1.0, 0.0], 1.0, [3.0, 0.0]),
    lambda: mf.sphere_in_perpperp(P([[1, 2], [3]]), [1.0, 0.0, 0.0], 1.0),
])
def test_builder_validation(bad):
    with pytest.raises(mf.ManifoldError):
        bad()


def test_rank_deficient_jacobian():
    M = mf.custom(2, 1, lambda x: [x[1] ** 2], lambda x: [[0.0, 2 * x[1]]], [0.0, 0.0])
    with pytest.raises(mf.RankDeficientJacobianError):
        mf.tangent_normal_at(M)


def test_json_roundtrip(tmp_path):
    for M in builtin_manifolds((3, 4)):
        obj = json.loads(json.dumps(M.to_json()))
        M2 = mf.descriptor_from_json(obj)
        assert (M2.kind, M2.n, M2.d) == (M.kind, M.n, M.d)
        assert np.array_equal(M2.base_point, M.base_point)
    spec = {"kind": "custom", "n": 2, "d": 1, "base_point": [1, 1],
            "equations": [[{"exponents": [1, 0], "coeff": 1}, {"exponents": [0, 1], "coeff": -1}]]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(spec))
    M = mf.load_descriptor(path)
    assert M.residual([3.0, 3.0]) == 0 and M.residual([1.0, 0.0]) == 1.0
    with pytest.raises(mf.ManifoldError):
        mf.descriptor_from_json({"kind": "torus", "n": 2})


def test_custom_polynomial_jacobian():
    x1, x2 = Polynomial.variable(1, 2), Polynomial.variable(2, 2)
    M = mf.custom_polynomial([x1**2 + x2**2 - 2], 1, [1.0, 1.0])
    assert np.allclose(M.jacobian([1.0, 1.0]), [[2.0, 2.0]])


def test_locality_radius():
    assert mf.stratum(P([[1, 2], [3]])).locality_radius() == 0.5
    assert mf.stratum(P([[1, 2], [3]]), [0.3, 0.3, 0.1]).locality_radius() == pytest.approx(0.1)
    # declared radius is capped at half the sphere radius
    assert mf.sphere_in_perpperp(Partition.discrete(2), 0.0, 0.4, [0.4, 0.0]).locality_radius() == pytest.approx(0.2)


# tangent / normal spaces ------------------------------------------------------


def test_diagonal_line_spaces():
    sp = mf.tangent_normal_at(DIAG_LINE)
    n = sp.normal_basis[:, 0]
    assert abs(abs(n @ np.array([1, -1]) / math.sqrt(2)) - 1) < 1e-12
    assert sp.n_red == 0 and sp.d == 1


def test_sphere_reduced_normal():
    M = mf.sphere_in_perpperp(Partition.discrete(3), 0.0, math.sqrt(14), [3.0, 2.0, 1.0])
    sp = mf.tangent_normal_at(M)
    assert sp.n_red == 1
    r = sp.reduced_normal_basis[:, 0]
    assert abs(abs(r @ np.array([3, 2, 1])) - math.sqrt(14)) < 1e-10


def test_reduced_normal_inside_perpperp():
    for M in builtin_manifolds((3, 4)):
        sp = mf.tangent_normal_at(M)
        S = Stratum(sp.active_partition)
        for v in sp.reduced_normal_basis.T:
            assert in_perpperp(S, v, 1e-9)
        assert np.allclose(sp.normal_basis.T @ sp.reduced_normal_basis,
                           sp.normal_basis.T @ sp.reduced_normal_basis, atol=0)


def test_gauss_newton_projection():
    M = mf.sphere_in_perpperp(Partition.discrete(3), 0.0, 2.0)
    x, ok = mf.gauss_newton_project(M, M.base_point + [0.05, -0.02, 0.01])
    assert ok and M.residual(x) < 1e-10


def test_sampled_points_stay_on_manifold_and_near():
    M = mf.sphere_in_perpperp(P([[1, 2], [3]]), 0.0, 2.0)
    pts = mf.sample_manifold_points(M, M.base_point, 20, 0.3, seed=1)
    assert all(M.contains(p) and np.linalg.norm(p - M.base_point) < 0.3 for p in pts)


# characteristic partition ---------------------------------------------------


def test_characteristic_examples():
    chi = mf.characteristic_permutation(mf.stratum(P([[1, 2], [3]])))
    assert chi.partition == P([[1, 2], [3]]) and (chi.kappa_star, chi.m_star) == (1, 1)
    chi = mf.characteristic_permutation(DIAG_LINE)
    assert chi.partition == P([[1, 2]]) and (chi.kappa_star, chi.m_star) == (0, 1)


def test_consecutive_block_gate():
    with pytest.raises(mf.NonConsecutiveBlocksError):
        mf.check_consecutive_blocks(P([[1], [2, 7, 4], [3, 5], [6]]))
    with pytest.raises(mf.NonConsecutiveBlocksError):
        mf.predicted_spectral_dimension(2, P([[1, 3], [2]]))
    mf.check_consecutive_blocks(P([[1], [2, 3, 4], [5, 6], [7]]))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_characteristic_of_strata_and_affine(n):
    from spectra.perm_core import set_partitions
    for Q in set_partitions(n):
        if Q.has_consecutive_blocks():
            assert mf.characteristic_permutation(mf.stratum(Q), seed=n).partition == Q
    for Q in (Partition.discrete(n), Partition.full(n)):
        assert mf.characteristic_permutation(mf.affine_perpperp(Q), seed=n).partition == Q


def test_kappa_star_at_most_one_samples_in_stratum():
    for M in builtin_manifolds((2, 3, 4)):
        chi = mf.characteristic_permutation(M, seed=3)
        if chi.kappa_star > 1:
            continue
        pts = mf.sample_manifold_points(M, M.base_point, 16, M.locality_radius(), seed=4)
        assert all(contains(chi.partition, p, 1e-9) for p in pts), M.name


def test_tangent_inside_characteristic_perpperp():
    for M in builtin_manifolds((2, 3, 4, 5)):
        chi = mf.characteristic_permutation(M, seed=0)
        T = mf.tangent_normal_at(M).tangent_basis
        S = Stratum(chi.partition)
        assert np.max(np.abs(T - S.projector() @ T), initial=0.0) <= 1e-9, M.name


def test_predicted_dimension_examples():
    assert mf.predicted_spectral_dimension(1, P([[1, 2]])) == 1
    assert mf.predicted_spectral_dimension(2, P([[1, 2], [3]])) == 4
    assert mf.predicted_spectral_dimension(3, Partition.discrete(3)) == 6


# dimension estimates -----------------------------------------------------------


def test_estimate_examples():
    assert mf.estimate_spectral_dimension(DIAG_LINE, seed=0).dimension == 1
    est = mf.estimate_spectral_dimension(mf.stratum(P([[1, 2], [3]])), [2.0, 2.0, 1.0], seed=0)
    assert est.ok and int(est) == 4
    assert mf.estimate_spectral_dimension(mf.constant_support(3, 1), seed=0).dimension == 3
    assert mf.estimate_spectral_dimension(mf.constant_support(3, 3), seed=0).dimension == 6


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_dimension_theorem_on_builtins(n):
    rng = np.random.default_rng(n)
    for M in builtin_manifolds((n,)):
        for x in [M.base_point] + mf.sample_base_points(M, 5, rng):
            c = mf.dimension_check(M, x, seed=rng)
            assert c.passed, (M.name, x, c)


def test_constant_rank_formula():
    for n in (2, 3, 4):
        for r in range(1, n + 1):
            c = mf.dimension_check(mf.constant_support(n, r), seed=1)
            assert c.passed and c.estimated == r * (2 * n - r + 1) // 2


def test_dimension_check_row():
    row = mf.dimension_check(mf.stratum(P([[1, 2], [3]])), seed=7).row()
    assert row["predicted"] == row["estimated"] == 4 and row["status"] == "PASS"


# symmetry ------------------------------------------------------------------


def test_symmetry_reports():
    assert mf.verify_tangent_normal_symmetry(mf.affine_perpperp(P([[1, 2], [3]]))).ok
    sphere = mf.sphere_in_perpperp(P([[1, 2], [3]]), 0.0, 3.0, [2.0, 2.0, 1.0])
    rep = mf.verify_tangent_normal_symmetry(sphere)
    assert rep.ok and rep.invariance_failures == []
    assert mf.check_manifold_symmetry(sphere)


def test_tie_across_a_nontrivial_block_breaks_symmetry():
    Q = P([[1, 2], [3], [4]])
    assert mf.symmetric_tie_pattern(Q, [1.0, 1.0, 0.0, 0.0])
    assert not mf.symmetric_tie_pattern(Q, [1.0, 1.0, 1.0, 0.0])
    M = mf.sphere_in_perpperp(Q, 0.0, math.sqrt(3.0), [1.0, 1.0, 1.0, 0.0])
    assert not mf.check_manifold_symmetry(M)
    assert not mf.verify_tangent_normal_symmetry(M).ok
    ok = mf.sphere_in_perpperp(Q, 0.0, math.sqrt(2.0), [1.0, 1.0, 0.0, 0.0])
    assert mf.check_manifold_symmetry(ok)


def test_sampled_base_points_are_symmetric():
    for M in builtin_manifolds((3, 4, 5)):
        for x in mf.sample_base_points(M, 6, seed=9):
            assert M.contains(x) and mf.check_manifold_symmetry(M, x), (M.name, x)


def test_negative_control():
    M = negative_control_manifold()
    rep = mf.verify_tangent_normal_symmetry(M)
    assert not rep.ok and rep.invariance_failures
    assert not mf.check_manifold_symmetry(M)
    at0 = mf.estimate_spectral_dimension(M, [0.0, 0.0], seed=0)
    away = mf.estimate_spectral_dimension(M, [0.5, 0.0], seed=0)
    assert not at0.ok and at0.curve_violations > 0
    assert away.ok and away.dimension == 2
    with pytest.raises(mf.NotLocallySymmetricManifoldError):
        mf.LocalChart.build(M)


# lifted equation -------------------------------------------------------------


def test_lifted_equation_zero_on_affine_lifts():
    M = mf.affine_perpperp(Partition.discrete(3), [3.0, 2.0, 1.0])
    chart = mf.LocalChart.build(M)
    U = random_orthogonal(3, 0)
    assert lifted_zero(chart, lift_point([3.1, 2.0, 0.9], U))


def lifted_zero(chart, X):
    return np.max(np.abs(mf.lifted_local_equation(chart, X)), initial=0.0) < 1e-10


def test_lifted_equation_sphere(rng):
    M = mf.sphere_in_perpperp(Partition.discrete(3), 0.0, math.sqrt(14), [3.0, 2.0, 1.0])
    chart = mf.LocalChart.build(M)
    assert chart.spaces.n_red == 1
    for p in mf.sample_manifold_points(M, M.base_point, 5, 0.2, seed=2):
        assert lifted_zero(chart, lift_point(p, random_orthogonal(3, rng)))
    off = M.base_point * (1 + 0.01)
    val = mf.lifted_local_equation(chart, lift_point(off, random_orthogonal(3, rng)))
    assert abs(val[0]) > 1e-3


def test_lifted_equation_domain_error():
    chart = mf.LocalChart.build(mf.stratum(P([[1, 2], [3]])))
    with pytest.raises(mf.DomainError):
        mf.lifted_local_equation(chart, np.diag([5.0, 5.0, 1.0]))
    assert chart.delta1 == chart.delta2 == pytest.approx(0.5 / math.sqrt(2))


def test_jacobian_rank_equals_reduced_normal_dimension():
    for M in builtin_manifolds((2, 3, 4)):
        chart = mf.LocalChart.build(M, seed=1)
        probe = mf.jacobian_probe(chart, seed=1)
        assert probe.rank == probe.n_red, M.name
        assert probe.formula_error < 1e-6
    assert mf.jacobian_rank_at(mf.sphere_in_perpperp(Partition.discrete(3), 0.0, 2.0)) == 1
