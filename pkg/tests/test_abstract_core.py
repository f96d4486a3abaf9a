"""Finite-dimensional design leg: lifted row, gain, energy form, audits.

Expected numbers for the rotor were computed by hand from the defining
equations (row solving row*A = C, the 3x3 energy form and its
characteristic polynomial) before the implementation existed.
"""

import numpy as np
import pytest
from hypothesis import assume, given, seed, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import forwardint as fw

TOL = 1e-12
PROBE_TOL = 1e-10

# Trailing 2x2 block of the rotor energy form has trace 1.6 and
# determinant 0.30, so its eigenvalues are (1.6 +- sqrt(1.36))/2.
ROTOR_LO = (1.6 - np.sqrt(1.36)) / 2.0
ROTOR_HI = (1.6 + np.sqrt(1.36)) / 2.0


def test_forwarding_row_rotor(rotor):
    np.testing.assert_allclose(fw.forwarding_operator(rotor), [0.0, -1.0],
                               atol=TOL)


def test_gain_assembly_rotor(rotor):
    d = fw.gain(rotor, fw.forwarding_operator(rotor), 0.3)
    np.testing.assert_allclose(d.gain, [0.0, -1.3, -0.3], atol=TOL)
    assert d.steady_gain == -1.0
    assert d.admissible
    np.testing.assert_allclose(d.bp_row, [0.0, 1.0], atol=TOL)


def test_control_value_rotor(rotor_design):
    xi = fw.ExtendedState(x=np.array([0.0, 1.0]), z=1.0)
    np.testing.assert_allclose(fw.control(rotor_design, xi), -1.6, atol=TOL)


@seed(777)
@settings(deadline=None, max_examples=150)
@given(vec=arrays(np.float64, (3,), elements=st.floats(-10.0, 10.0)))
def test_control_structured_equals_flat_gain(rotor_design, vec):
    # two routes to u: the structured damped-energy form vs the flat row
    xi = fw.state_from_vector(vec)
    structured = fw.control(rotor_design, xi)
    flat = float(rotor_design.gain @ vec)
    np.testing.assert_allclose(structured, flat, atol=1e-10)


@seed(778)
@settings(deadline=None, max_examples=60)
@given(m=arrays(np.float64, (3, 3), elements=st.floats(-3.0, 3.0)),
       c=arrays(np.float64, (3,), elements=st.floats(-3.0, 3.0)))
def test_forwarding_row_solves_lift(m, c):
    svals = np.linalg.svd(m, compute_uv=False)
    assume(svals[-1] > 1e-5 * max(svals[0], 1.0))
    sys_ = fw.abstract_system(m, np.zeros(3), c, np.eye(3))
    row = fw.forwarding_operator(sys_)
    np.testing.assert_allclose(row @ m, c, atol=1e-7 * (1 + svals[0] / svals[-1]))


def test_forwarding_rejects_singular():
    sys_ = fw.abstract_system([[1.0, 0.0], [0.0, 0.0]], [0.0, 1.0],
                              [1.0, 0.0], np.eye(2))
    with pytest.raises(np.linalg.LinAlgError):
        fw.forwarding_operator(sys_)


def test_gain_rejects_nonpositive_weight(rotor):
    row = fw.forwarding_operator(rotor)
    with pytest.raises(ValueError):
        fw.gain(rotor, row, 0.0)


def test_lyap_inner_rotor(rotor, rotor_design):
    xi = fw.ExtendedState(x=np.array([0.0, 1.0]), z=1.0)
    # <Px,x> = 1, residual z - row*x = 1 - (-1) = 2, so 1 + 0.3*4 = 2.2
    np.testing.assert_allclose(fw.lyap_inner(rotor, rotor_design, xi, xi),
                               2.2, atol=TOL)


@seed(779)
@settings(deadline=None, max_examples=100)
@given(v1=arrays(np.float64, (3,), elements=st.floats(-5.0, 5.0)),
       v2=arrays(np.float64, (3,), elements=st.floats(-5.0, 5.0)))
def test_lyap_inner_symmetric_bilinear(rotor, rotor_design, v1, v2):
    s1, s2 = fw.state_from_vector(v1), fw.state_from_vector(v2)
    a = fw.lyap_inner(rotor, rotor_design, s1, s2)
    b = fw.lyap_inner(rotor, rotor_design, s2, s1)
    np.testing.assert_allclose(a, b, atol=1e-9)
    two = fw.state_from_vector(2.0 * v1)
    np.testing.assert_allclose(fw.lyap_inner(rotor, rotor_design, two, s2),
                               2.0 * a, atol=1e-9)


def test_quad_form_matrix_rotor(rotor, rotor_design):
    q = fw.quad_form_matrix(rotor, rotor_design)
    np.testing.assert_allclose(
        q, [[1.0, 0.0, 0.0], [0.0, 1.3, 0.3], [0.0, 0.3, 0.3]], atol=TOL)


def test_quad_form_matches_inner(rotor, rotor_design):
    rng = np.random.default_rng(5)
    for _ in range(50):
        v = rng.standard_normal(3)
        xi = fw.state_from_vector(v)
        np.testing.assert_allclose(
            fw.lyap_inner(rotor, rotor_design, xi, xi),
            float(v @ fw.quad_form_matrix(rotor, rotor_design) @ v),
            atol=1e-10)


def test_norm_equivalence_rotor(rotor, rotor_design):
    nb = fw.norm_equivalence(rotor, rotor_design)
    np.testing.assert_allclose(nb.lo, ROTOR_LO, atol=TOL)
    np.testing.assert_allclose(nb.hi, ROTOR_HI, atol=TOL)
    assert nb.weakly_coercive


def test_validate_rotor_all_pass(rotor):
    rep = fw.validate_assumptions(rotor)
    assert rep.all_pass
    assert rep.worst_dissipation_eig <= 1e-12
    assert rep.min_singular_value == 1.0
    assert rep.observability_rank == 2
    np.testing.assert_allclose(rep.steady_state_gain, -1.0, atol=TOL)


def _two_rotors():
    a = np.zeros((4, 4))
    a[0, 1], a[1, 0] = 1.0, -1.0
    a[2, 3], a[3, 2] = 1.0, -1.0
    return fw.abstract_system(a, [0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0],
                              np.eye(4))


def test_validate_flags_only_observability():
    rep = fw.validate_assumptions(_two_rotors())
    assert not rep.observable
    assert rep.observability_rank == 2
    assert rep.dissipative and rep.invertible and rep.coercive
    assert rep.steady_state_gain_nonzero
    np.testing.assert_allclose(rep.steady_state_gain, -1.0, atol=TOL)


def test_validate_flags_only_dissipativity():
    sys_ = fw.abstract_system([[1.0]], [1.0], [1.0], [[1.0]])
    rep = fw.validate_assumptions(sys_)
    assert not rep.dissipative
    np.testing.assert_allclose(rep.worst_dissipation_eig, 2.0, atol=TOL)
    assert rep.invertible and rep.coercive and rep.observable
    assert rep.steady_state_gain_nonzero


def test_validate_reports_singular_state_matrix():
    sys_ = fw.abstract_system([[0.0, 1.0], [0.0, 0.0]], [0.0, 1.0],
                              [1.0, 0.0], np.eye(2))
    rep = fw.validate_assumptions(sys_)
    assert not rep.invertible
    assert not rep.steady_state_gain_nonzero
    assert np.isnan(rep.steady_state_gain)


def test_report_serialization(rotor):
    rep = fw.validate_assumptions(rotor)
    table = rep.as_table()
    assert "ok" in table and "FAIL" not in table
    records = rep.as_records()
    assert records["observable.rank"] == 2
    assert records["compact_injection"] is True


def test_closed_loop_field_rotor(rotor, rotor_design):
    psi = fw.saturation(0.2)
    xi = fw.ExtendedState(x=np.array([0.0, 1.0]), z=1.0)
    field = fw.closed_loop_field(rotor, rotor_design, psi, xi)
    # u = -1.6 clamps to -0.2; x' = A x + B*(-0.2); z' = x1
    np.testing.assert_allclose(field.x, [1.0, -0.2], atol=TOL)
    np.testing.assert_allclose(field.z, 0.0, atol=TOL)


def test_closed_loop_field_rejects_inadmissible(rotor):
    # forwarding row orthogonal to B: steady gain vanishes
    d = fw.gain(rotor, [1.0, 0.0], 0.3)
    assert not d.admissible
    xi = fw.ExtendedState(x=np.zeros(2), z=0.0)
    with pytest.raises(ValueError):
        fw.closed_loop_field(rotor, d, fw.identity(), xi)


def test_probe_rotor_small(rotor, rotor_design):
    for psi in (fw.saturation(0.2), fw.identity(), fw.scaled_sigmoid(0.2)):
        res = fw.dissipativity_probe(rotor, rotor_design, psi, 200, seed=11)
        assert res.max_normalized <= PROBE_TOL
        assert res.samples == 200


def test_probe_is_seeded(rotor, rotor_design):
    psi = fw.saturation(0.2)
    r1 = fw.dissipativity_probe(rotor, rotor_design, psi, 50, seed=4)
    r2 = fw.dissipativity_probe(rotor, rotor_design, psi, 50, seed=4)
    assert r1.max_inner == r2.max_inner


def test_state_vector_roundtrip():
    xi = fw.ExtendedState(x=np.array([1.5, -2.0]), z=0.25)
    back = fw.state_from_vector(xi.as_vector())
    np.testing.assert_allclose(back.x, xi.x)
    assert back.z == xi.z


def test_abstract_system_validation():
    with pytest.raises(ValueError):
        fw.abstract_system([[0.0, 1.0]], [0.0, 1.0], [1.0, 0.0], np.eye(2))
    with pytest.raises(ValueError):
        fw.abstract_system(np.eye(2), [0.0, 1.0, 2.0], [1.0, 0.0], np.eye(2))
    with pytest.raises(ValueError):
        fw.abstract_system(np.eye(2), [0.0, 1.0], [1.0, 0.0],
                           [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError):
        fw.abstract_system(np.full((2, 2), np.nan), [0.0, 1.0], [1.0, 0.0],
                           np.eye(2))


def test_load_matrix_shapes(tmp_path):
    f = tmp_path / "m.txt"
    f.write_text("0 1\n-1 0\n")
    np.testing.assert_allclose(fw.load_matrix(f), [[0.0, 1.0], [-1.0, 0.0]])
    col = tmp_path / "b.txt"
    col.write_text("0\n1\n")
    assert fw.load_matrix(col).shape == (2, 1)
    row = tmp_path / "c.txt"
    row.write_text("1 0\n")
    assert fw.load_matrix(row).shape == (1, 2)


def test_load_matrix_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 two\n")
    with pytest.raises(ValueError):
        fw.load_matrix(bad)
    with pytest.raises(OSError):
        fw.load_matrix(tmp_path / "missing.txt")
