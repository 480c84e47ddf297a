import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tensionnet.cases import gen_octahedron, gen_unit_cell
from tensionnet.errors import EquilibriumNotFoundError, ValidationError
from tensionnet.formfind import solve_form
from tensionnet.material import MaterialModel, ogden_stress, strain_from_stress, unstretched_lengths
from tensionnet.netgraph import Network
from tensionnet.verify import forward_equilibrium, score_error

MODEL = MaterialModel()


def _round_trip_network(net):
    res = solve_form(net)
    return res, res.network.replace(l0=unstretched_lengths(res, MODEL))


def test_score_examples():
    assert score_error([10.0], [9.9]) == pytest.approx(1.0)
    assert score_error([3.0, 4.0], [3.0, 4.0]) == 0.0
    assert score_error([], []) == 0.0
    with pytest.raises(ValidationError):
        score_error([1.0, 2.0], [1.0])
    with pytest.raises(ValidationError):
        score_error([0.0], [1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.1, 100), min_size=1, max_size=20), st.floats(1e-3, 1e3),
       st.integers(0, 2**32 - 1))
def test_score_scale_invariant(d, k, seed):
    d = np.array(d)
    m = d * np.random.default_rng(seed).uniform(0.9, 1.1, d.size)
    assert score_error(d * k, m * k) == pytest.approx(score_error(d, m), rel=1e-9, abs=1e-12)
    assert score_error(d, m) >= 0


def test_symmetric_hammock():
    net = Network.build([[-1, 0], [1, 0], [0.3, 0.4]], [(0, 2), (1, 2)], fixed=[0, 1],
                        l0=[0.9, 0.9])
    r = forward_equilibrium(net)
    np.testing.assert_allclose(r.coordinates[2], [0, 0], atol=1e-9)
    F = MODEL.area * ogden_stress(MODEL, 1 / 0.9)
    np.testing.assert_allclose(r.tensions, [F, F], rtol=1e-9)
    assert r.max_residual <= 1e-6


def test_vertical_edge_carries_load():
    F0 = 0.5 * MODEL.sigma_max * MODEL.area
    net = Network.build([[0, 0], [0, -10.5]], [(0, 1)], fixed=[0], l0=[10.0],
                        loads=[[0, 0], [0, -F0]])
    r = forward_equilibrium(net)
    assert r.tensions[0] == pytest.approx(F0, rel=1e-6)
    stretch = 1 + strain_from_stress(MODEL, F0 / MODEL.area)
    np.testing.assert_allclose(r.coordinates[1], [0, -10 * stretch], atol=1e-6)


@pytest.mark.parametrize("make", [gen_unit_cell, gen_octahedron])
def test_round_trip_recovers_form(make):
    res, net = _round_trip_network(make())
    # struts are springs in the solver; make them effectively rigid here
    r = forward_equilibrium(net, MODEL, strut_ea=1e9)
    np.testing.assert_allclose(r.coordinates, res.coordinates, atol=1e-6)
    assert r.score < 1e-3


def test_round_trip_from_perturbed_start():
    res, net = _round_trip_network(gen_unit_cell())
    x = np.array(net.vertices)
    x[~net.fixed] += np.random.default_rng(0).normal(0, 3, (int((~net.fixed).sum()), 2))
    r = forward_equilibrium(net.replace(vertices=x), MODEL)
    np.testing.assert_allclose(r.coordinates, res.coordinates, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1e-6, 1e-9]))
def test_cables_never_push(seed, tol):
    _, net = _round_trip_network(gen_unit_cell())
    rng = np.random.default_rng(seed)
    # lengthen some targets past their span so those cables go slack
    l0 = net.l0 * rng.uniform(0.97, 1.15, net.n_edges)
    r = forward_equilibrium(net.replace(l0=l0), MODEL, tol=tol)
    cable = ~net.is_strut
    assert np.all(r.tensions[cable] >= 0)
    slack = cable & (r.lengths <= l0)
    assert np.all(r.tensions[slack] == 0)
    assert r.max_residual <= tol


def test_no_equilibrium_beyond_calibrated_stretch(caplog):
    # the far anchor sits at 2.4x the rest length, where the raw fit has no stiffness left
    net = Network.build([[-1, 0], [1, 0], [-1.147, 0.0726]], [(0, 2), (1, 2)], fixed=[0, 1],
                        l0=[0.9, 0.9])
    r = forward_equilibrium(net)
    np.testing.assert_allclose(r.coordinates[2], [0, 0], atol=1e-6)
    one = Network.build([[0, 0], [0, -1.0]], [(0, 1)], fixed=[0], l0=[0.5], loads=[[0, 0], [0, -1e3]])
    r = forward_equilibrium(one)
    assert r.lengths[0] / 0.5 > MODEL.lambda_max
    assert "beyond the calibrated stretch" in caplog.text


def test_report_fields():
    res, net = _round_trip_network(gen_unit_cell())
    r = forward_equilibrium(net, MODEL)
    rep = r.report(res.lengths)
    assert rep["score_percent"] == r.score
    assert len(rep["edges"]) == net.n_edges
    assert {"design", "realized", "tension", "error_percent"} <= set(rep["edges"][0])


def test_non_convergence_reports_residual():
    _, net = _round_trip_network(gen_unit_cell())
    x = np.array(net.vertices)
    x[~net.fixed] += np.random.default_rng(0).normal(0, 3, (int((~net.fixed).sum()), 2))
    with pytest.raises(EquilibriumNotFoundError, match="equilibrium not found") as info:
        forward_equilibrium(net.replace(vertices=x), MODEL, max_iter=1)
    assert info.value.residual > 1e-6


def test_input_validation():
    net = Network.build([[0, 0], [1, 0]], [(0, 1)], fixed=[0])
    with pytest.raises(ValidationError):
        forward_equilibrium(net)
    with pytest.raises(ValidationError):
        forward_equilibrium(net, l0=[1.0], loads=np.zeros((3, 2)))
