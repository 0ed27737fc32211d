import numpy as np
import pytest
from scipy import stats

from robggm import ConfigurationError, DataMatrix
from robggm.datagen import (
    ContaminationSpec,
    PrecisionModel,
    contaminate,
    contamination_mask,
    generate_graph,
    sample_clean,
)

KINDS = ["chain", "hub", "scale_free", "random"]


def identity_model(p):
    eye = np.eye(p)
    return PrecisionModel("identity", eye, eye, frozenset())


def test_chain_p4_edges():
    model = generate_graph("chain", 4, seed=0)
    assert model.edges == {(0, 1), (1, 2), (2, 3)}


def test_hub_p40_two_groups():
    model = generate_graph("hub", 40, seed=0)
    expected = {(0, j) for j in range(1, 20)} | {(20, j) for j in range(21, 40)}
    assert model.edges == expected
    assert len(model.edges) == 38


def test_random_p100_seed7_edge_count():
    model = generate_graph("random", 100, seed=7)
    assert 100 <= len(model.edges) <= 200


def test_scale_free_is_a_tree():
    model = generate_graph("scale_free", 60, seed=3)
    assert len(model.edges) == 59
    # a tree on p nodes with p-1 edges is connected iff the Laplacian has one zero eigenvalue
    adj = model.adjacency().astype(float)
    lap = np.diag(adj.sum(1)) - adj
    assert np.sum(np.linalg.eigvalsh(lap) < 1e-9) == 1


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_precision_model_invariants(kind, seed):
    model = generate_graph(kind, 40, seed=seed)
    assert np.max(np.abs(model.omega @ model.sigma - np.eye(40))) < 1e-8
    np.testing.assert_array_equal(np.diag(model.sigma), 1.0)
    assert np.linalg.eigvalsh(model.sigma)[0] > 0
    iu = np.triu_indices(40, k=1)
    support = {(int(i), int(j)) for i, j in zip(*iu) if model.omega[i, j] != 0}
    assert support == model.edges
    np.testing.assert_array_equal(model.omega, model.omega.T)


@pytest.mark.parametrize("kind", KINDS)
def test_generate_deterministic(kind):
    a = generate_graph(kind, 40, seed=11)
    b = generate_graph(kind, 40, seed=11)
    assert a.edges == b.edges
    np.testing.assert_array_equal(a.omega, b.omega)


def test_generate_errors():
    with pytest.raises(ConfigurationError):
        generate_graph("hub", 30, seed=0)
    with pytest.raises(ConfigurationError):
        generate_graph("chain", 1, seed=0)
    with pytest.raises(ConfigurationError):
        generate_graph("star", 10, seed=0)


def test_hub_custom_group_size():
    model = generate_graph("hub", 50, seed=0, hub_size=10)
    assert len(model.edges) == 45
    assert all(i % 10 == 0 for i, _ in model.edges)


def test_sample_identity_lln():
    x = sample_clean(identity_model(2), 100_000, seed=1).values
    assert np.max(np.abs(np.cov(x, rowvar=False) - np.eye(2))) < 0.05


def test_sample_single_row():
    x = sample_clean(generate_graph("chain", 5), 1, seed=0)
    assert x.values.shape == (1, 5)
    assert np.all(np.isfinite(x.values))


def test_sample_deterministic():
    model = generate_graph("random", 20, seed=2)
    a = sample_clean(model, 30, seed=5).values
    b = sample_clean(model, 30, seed=5).values
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_clean(model, 30, seed=6).values)


def test_sample_rejects_zero_rows():
    with pytest.raises(ConfigurationError):
        sample_clean(generate_graph("chain", 5), 0, seed=0)


def test_contaminate_eps_zero_identity(rng):
    clean = DataMatrix(rng.standard_normal((50, 4)))
    out = contaminate(clean, ContaminationSpec(0.0), seed=3)
    np.testing.assert_array_equal(out.values, clean.values)


def test_contaminate_eps_one_mean():
    clean = DataMatrix(np.zeros((10_000, 1)))
    out = contaminate(clean, ContaminationSpec(1.0, "asymmetric"), seed=0)
    assert abs(out.values.mean() - 10) < 0.1


def test_contaminate_symmetric_signs():
    clean = DataMatrix(np.zeros((10_000, 1)))
    out = contaminate(clean, ContaminationSpec(1.0, "sym"), seed=0).values
    assert abs(np.mean(out > 0) - 0.5) < 0.02
    assert abs(np.mean(np.abs(out)) - 10) < 0.1


def test_contaminated_fraction_over_seeds():
    clean = DataMatrix(np.zeros((200, 100)))
    fractions = [np.mean(contaminate(clean, ContaminationSpec(0.25), s).values != 0) for s in range(20)]
    assert 0.23 <= np.mean(fractions) <= 0.27
    assert all(0.23 <= f <= 0.27 for f in fractions)


def test_contaminate_deterministic(rng):
    clean = DataMatrix(rng.standard_normal((40, 5)))
    spec = ContaminationSpec(0.3, "symmetric")
    assert contaminate(clean, spec, 9).values.tobytes() == contaminate(clean, spec, 9).values.tobytes()


def test_contaminate_keeps_names():
    clean = DataMatrix(np.zeros((5, 2)), names=("a", "b"))
    assert contaminate(clean, ContaminationSpec(0.5), 0).names == ("a", "b")


def test_mask_matches_contaminate():
    clean = DataMatrix(np.zeros((300, 7)))
    out = contaminate(clean, ContaminationSpec(0.2), seed=4).values
    np.testing.assert_array_equal(out != 0, contamination_mask((300, 7), 0.2, seed=4))


@pytest.mark.parametrize("seed", [101, 202, 303])
def test_mask_cell_independence(seed):
    # chi-square test on horizontally adjacent cells over 10^4 cells
    m = contamination_mask((100, 100), 0.25, seed)
    a, b = m[:, :-1:2].ravel(), m[:, 1::2].ravel()
    table = np.array([[np.sum(~a & ~b), np.sum(~a & b)], [np.sum(a & ~b), np.sum(a & b)]])
    assert stats.chi2_contingency(table, correction=False).pvalue > 0.01
    # and vertically adjacent cells
    a, b = m[:-1:2].ravel(), m[1::2].ravel()
    table = np.array([[np.sum(~a & ~b), np.sum(~a & b)], [np.sum(a & ~b), np.sum(a & b)]])
    assert stats.chi2_contingency(table, correction=False).pvalue > 0.01


@pytest.mark.parametrize("bad", [dict(eps=-0.1), dict(eps=1.5), dict(eps=0.1, scenario="left"),
                                 dict(eps=0.1, contam_sd=-1)])
def test_contamination_spec_errors(bad):
    with pytest.raises(ConfigurationError):
        ContaminationSpec(**bad)


def test_data_matrix_validation():
    with pytest.raises(ConfigurationError):
        DataMatrix(np.array([[1.0, np.nan]]))
    with pytest.raises(ConfigurationError):
        DataMatrix(np.zeros(3))
    with pytest.raises(ConfigurationError):
        DataMatrix(np.zeros((2, 2)), names=("a",))
    d = DataMatrix([[1, 2], [3, 4]])
    assert (d.n, d.p) == (2, 2)
    with pytest.raises(ValueError):
        d.values[0, 0] = 5
