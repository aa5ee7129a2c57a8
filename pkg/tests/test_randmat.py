import math

import numpy as np
import pytest

from itolab.checks import ConstantTable
from itolab.lq import LqElement, embed, norm_q
from itolab.prob import philox
from itolab.randmat import (EntryLaw, MatrixEnsemble, bound_entry_matrix,
                            bound_latala, bound_matrix_sum, gaussian_law,
                            rademacher_law, seginer_ensemble, two_atom_law)


def test_entry_laws_mean_zero_and_moments():
    r = rademacher_law()
    assert r.abs_moment(2.0) == pytest.approx(1.0)
    assert r.abs_moment(4.0) == pytest.approx(1.0)
    g = gaussian_law()
    assert g.abs_moment(2.0) == pytest.approx(1.0)
    assert g.abs_moment(4.0) == pytest.approx(3.0)
    t = two_atom_law(3.0, 0.1)
    assert float((t.atoms * t.probs).sum()) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(Exception):
        EntryLaw("bad", np.array([1.0, 1.0]), np.array([0.5, 0.5]))


def test_sum_bound_single_deterministic_like():
    # n = 1 with a two-atom law collapsing to +-x: bounds hold with slack
    ens = MatrixEnsemble(2, 2, 1, rademacher_law())
    rep = bound_matrix_sum(ens, 2.0)
    assert rep.status == "pass"
    assert rep.lhs <= rep.rhs


def test_sum_bound_diagonal_rademacher_exact():
    # diagonal summands via a scale pattern zeroing the off-diagonal
    scale = np.eye(2)
    ens = MatrixEnsemble(2, 2, 4, rademacher_law(), "summand", scale)
    assert ens.exact_feasible()
    rep = bound_matrix_sum(ens, 4.0)
    assert rep.status == "pass"
    assert not rep.details["monte_carlo"]
    # diagonal of n summands of +-1 entries: ||sum|| = max |sum of signs|
    assert rep.lhs <= 4.0 + 1e-9


def test_sum_bound_monte_carlo_full_matrices():
    ens = MatrixEnsemble(4, 4, 8, rademacher_law())
    rep = bound_matrix_sum(ens, 4.0, n_samples=3000, seed=3)
    assert rep.details["monte_carlo"]
    assert rep.status == "pass"


def test_sum_bound_gaussian():
    ens = MatrixEnsemble(3, 3, 4, gaussian_law())
    rep = bound_matrix_sum(ens, 2.0, n_samples=3000, seed=4)
    assert rep.status == "pass"


def test_sum_bound_status_scale_invariant():
    base = MatrixEnsemble(2, 2, 4, rademacher_law())
    scaled = MatrixEnsemble(2, 2, 4, rademacher_law(), "summand",
                            4.0 * np.ones((2, 2)))
    r1 = bound_matrix_sum(base, 2.0, n_samples=2000, seed=5)
    r2 = bound_matrix_sum(scaled, 2.0, n_samples=2000, seed=5)
    assert r1.status == r2.status == "pass"


def test_entry_bound_single_nonzero_entry():
    scale = np.zeros((3, 3))
    scale[0, 0] = 1.0
    ens = MatrixEnsemble(3, 3, 1, rademacher_law(), "entries", scale)
    rep = bound_entry_matrix(ens, 2.0)
    assert rep.status == "pass"
    assert rep.lhs == pytest.approx(1.0, rel=1e-9)


def test_entry_bound_iid_signs_row_column_terms():
    d = 4
    ens = MatrixEnsemble(d, d, 1, rademacher_law(), "entries")
    rep = bound_entry_matrix(ens, 2.0, n_samples=2000, seed=6)
    assert rep.details["column"] == pytest.approx(math.sqrt(d))
    assert rep.details["row"] == pytest.approx(math.sqrt(d))
    assert rep.status == "pass"


def test_entry_bound_heavy_two_atom():
    law = two_atom_law(30.0, 0.002, fourth_finite=False)
    ens = MatrixEnsemble(3, 3, 1, law, "entries")
    rep = bound_entry_matrix(ens, 2.0, n_samples=4000, seed=7)
    assert rep.status == "pass"
    lat = bound_latala(ens, 2.0, n_samples=1000, seed=7)
    assert lat.status == "report-only"
    assert "inapplicable" in lat.details["note"]


def test_latala_deterministic_single_entry():
    scale = np.zeros((2, 2))
    scale[1, 1] = 2.0
    ens = MatrixEnsemble(2, 2, 1, rademacher_law(), "entries", scale)
    rep = bound_latala(ens, 2.0)
    # all three terms equal |x| = 2
    assert rep.details["row_term"] == pytest.approx(2.0)
    assert rep.details["column_term"] == pytest.approx(2.0)
    assert rep.details["fourth_term"] == pytest.approx(2.0)
    assert rep.details["first_ratio"] == pytest.approx(2.0 / 6.0, rel=1e-9)


def test_latala_iid_signs_closed_form_terms():
    d = 4
    ens = MatrixEnsemble(d, d, 1, rademacher_law(), "entries")
    rep = bound_latala(ens, 2.0, n_samples=2000, seed=8)
    assert rep.details["row_term"] == pytest.approx(math.sqrt(d))
    assert rep.details["column_term"] == pytest.approx(math.sqrt(d))
    assert rep.details["fourth_term"] == pytest.approx((d * d) ** 0.25)
    assert rep.status == "report-only"


def test_latala_gaussian_comparison_emitted():
    ens = MatrixEnsemble(8, 8, 1, gaussian_law(), "entries")
    rep = bound_latala(ens, 2.0, n_samples=2000, seed=9)
    assert math.isfinite(rep.details["first_ratio"])
    assert math.isfinite(rep.details["moment_ratio"])


def test_latala_configured_constant():
    ens = MatrixEnsemble(4, 4, 1, rademacher_law(), "entries")
    rep = bound_latala(ens, 2.0, n_samples=2000, seed=10,
                       table=ConstantTable(latala_constant=10.0))
    assert rep.status == "pass"


def test_seginer_d1_ratio_one():
    rep = seginer_ensemble(np.ones((1, 3)), 2.0)
    # a single row: the sum is a fixed-norm row vector, ratio exactly 1
    assert rep.details["ratio"] == pytest.approx(1.0, rel=1e-9)


def test_seginer_all_ones_exact():
    rep = seginer_ensemble(np.ones((4, 4)), 2.0)
    assert not rep.details["monte_carlo"]
    assert rep.details["ratio"] >= 1.0


def test_seginer_dimension_sweep_envelope():
    ratios = []
    for d in (2, 4, 8):
        rep = seginer_ensemble(np.ones((d, d)), 2.0, n_samples=2000, seed=11)
        ratios.append(rep.details["ratio"])
    assert all(math.isfinite(r) for r in ratios)
    assert ratios == sorted(ratios)  # nondecreasing measured envelope


def test_diag_embedding_is_max_norm():
    gen = philox(30, 0)
    xs = [LqElement(gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2)))
          for _ in range(4)]
    diag = embed(xs, "diag")
    assert norm_q(diag, math.inf) == pytest.approx(
        max(norm_q(x, math.inf) for x in xs), rel=1e-12)


def test_column_row_terms_two_ways():
    gen = philox(31, 0)
    xs = [LqElement(gen.standard_normal((2, 2)) + 1j * gen.standard_normal((2, 2)))
          for _ in range(3)]
    # way 1: embed as a block column and take the operator norm
    col_embed = norm_q(embed(xs, "col"), math.inf)
    # way 2: direct eigen-norm of the summed gram matrix
    gram = sum(x.values.conj().T @ x.values for x in xs)
    direct = math.sqrt(float(np.linalg.eigvalsh(gram).max()))
    assert col_embed == pytest.approx(direct, rel=1e-10)


def test_reverse_direction_terms():
    ens = MatrixEnsemble(2, 2, 4, rademacher_law())
    rep = bound_matrix_sum(ens, 2.0)
    # the reverse bounds are part of the pass status; spot-check the numbers
    assert rep.details["column"] <= 2.0 * rep.lhs + 1e-9
    assert rep.details["max_term"] <= 2.0 ** 1.5 * rep.lhs + 1e-9


def test_seginer_sweep_includes_d16():
    rep = seginer_ensemble(np.ones((16, 16)), 2.0, n_samples=1500, seed=12)
    assert rep.details["monte_carlo"]
    assert math.isfinite(rep.details["ratio"])


def test_sampled_status_stable_across_seeds():
    ens = MatrixEnsemble(4, 4, 8, rademacher_law())
    r1 = bound_matrix_sum(ens, 2.0, n_samples=3000, seed=1)
    r2 = bound_matrix_sum(ens, 2.0, n_samples=3000, seed=999)
    assert r1.status == r2.status == "pass"
