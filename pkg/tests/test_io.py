import numpy as np
import pytest

from gsbm.exceptions import ConfigError, ParseError
from gsbm.graph_io import (
    ObservedGraph,
    dumps_fit,
    format_edge_list,
    format_pair_list,
    largest_connected_component,
    load_fit,
    loads_fit,
    parse_edge_list,
    parse_mask,
    save_fit,
)
from gsbm.simulate import OutlierConfig, SbmConfig, build_ground_truth, sample_adjacency
from gsbm.solver import FitResult, SolverConfig, fit
from gsbm.simulate import full_observation


# ------------------------------------------------------------ edge lists

def test_parse_edge_list_basic():
    graph = parse_edge_list("a b\nb c\n")
    assert graph.n == 3
    assert graph.node_names == ["a", "b", "c"]
    assert graph.adjacency.sum() == 4  # two undirected edges
    assert np.array_equal(graph.mask, np.ones((3, 3)) - np.eye(3))


def test_parse_edge_list_self_loop():
    with pytest.warns(RuntimeWarning):
        graph = parse_edge_list("a a\n")
    assert graph.n == 1
    assert not graph.adjacency.any()


def test_parse_edge_list_dedup_and_comments():
    graph = parse_edge_list("a b\nb a\n# x\n")
    assert graph.n == 2
    assert graph.adjacency.sum() == 2


def test_parse_edge_list_bad_line():
    with pytest.raises(ParseError) as err:
        parse_edge_list("a b\nc\n")
    assert err.value.line_no == 2


def test_parse_edge_list_first_appearance_order():
    graph = parse_edge_list("z y\nx z\n")
    assert graph.node_names == ["z", "y", "x"]


def edge_label_set(graph):
    iu = np.argwhere(np.triu(graph.adjacency, k=1) == 1.0)
    return {frozenset((graph.node_names[i], graph.node_names[j])) for i, j in iu}


def test_edge_list_roundtrip_idempotent():
    truth = build_ground_truth(
        SbmConfig(n_inliers=15, k_communities=2, p_in=0.7, p_out=0.2, seed=4),
        OutlierConfig(kind="hub", s=1, pi_hub=0.9),
    )
    A = sample_adjacency(truth, 9)
    names = [f"n{i}" for i in range(truth.n)]
    graph = ObservedGraph(n=truth.n, adjacency=A, mask=full_observation(truth.n),
                          node_names=names)
    text = format_edge_list(graph)
    reparsed = parse_edge_list(text)
    # the produced file reparses to the same graph in label space
    assert edge_label_set(reparsed) == edge_label_set(graph)
    # and parsing identical text is deterministic
    again = parse_edge_list(text)
    assert again.node_names == reparsed.node_names
    assert np.array_equal(again.adjacency, reparsed.adjacency)


# ------------------------------------------------------------ masks

def test_parse_mask_modes():
    # empty file in missing mode: everything off-diagonal observed
    omega = parse_mask("", 3, "missing")
    assert np.array_equal(omega, np.ones((3, 3)) - np.eye(3))
    # observed mode lists exactly the examined pairs
    omega = parse_mask("0 1\n", 3, "observed")
    want = np.zeros((3, 3))
    want[0, 1] = want[1, 0] = 1.0
    assert np.array_equal(omega, want)
    # missing mode complements
    omega = parse_mask("0 1\n", 3, "missing")
    assert np.array_equal(omega, np.ones((3, 3)) - np.eye(3) - want)


def test_parse_mask_errors():
    with pytest.raises(ParseError):
        parse_mask("0 9\n", 3, "observed")
    with pytest.raises(ParseError):
        parse_mask("0 x\n", 3, "observed")
    with pytest.raises(ParseError):
        parse_mask("0 1 2\n", 3, "observed")
    with pytest.raises(ConfigError):
        parse_mask("", 3, "sideways")


def test_observed_graph_validation():
    A = np.zeros((3, 3))
    with pytest.raises(ConfigError):
        ObservedGraph(n=3, adjacency=A, mask=np.ones((3, 3)), node_names=list("abc"))
    asym = np.zeros((3, 3))
    asym[0, 1] = 1.0
    with pytest.raises(ConfigError):
        ObservedGraph(n=3, adjacency=asym, mask=np.zeros((3, 3)), node_names=list("abc"))
    # edge on an unexamined dyad warns
    A2 = np.zeros((3, 3))
    A2[0, 1] = A2[1, 0] = 1.0
    with pytest.warns(RuntimeWarning):
        ObservedGraph(n=3, adjacency=A2, mask=np.zeros((3, 3)), node_names=list("abc"))


# ------------------------------------------------------------ LCC

def test_largest_connected_component():
    graph = parse_edge_list("a b\nb c\nx y\n")
    sub = largest_connected_component(graph)
    assert sub.n == 3
    assert sub.node_names == ["a", "b", "c"]
    assert sub.adjacency.sum() == 4


def test_lcc_tie_breaks_to_first():
    graph = parse_edge_list("a b\nc d\n")
    sub = largest_connected_component(graph)
    assert sub.node_names == ["a", "b"]


# ------------------------------------------------------------ fit artifacts

def zero_fit(n=3):
    cfg = SolverConfig(lambda1=1.5, lambda2=2.5)
    return FitResult(
        L_hat=np.zeros((n, n)), S_hat=np.zeros((n, n)),
        objective_trace=np.asarray([0.0]), iterations=1, converged=True,
        config_echo=cfg,
    )


def test_fit_roundtrip_zero_is_byte_stable(tmp_path):
    path = tmp_path / "zero.fit"
    save_fit(zero_fit(), path, node_names=["a", "b", "c"])
    first = path.read_bytes()
    loaded, names = load_fit(path)
    save_fit(loaded, path, node_names=names)
    assert path.read_bytes() == first


def test_fit_roundtrip_seeded_fit_exact(tmp_path):
    truth = build_ground_truth(
        SbmConfig(n_inliers=18, k_communities=2, p_in=0.7, p_out=0.2, seed=3),
        OutlierConfig(kind="hub", s=2, pi_hub=0.7),
    )
    A = sample_adjacency(truth, 5)
    omega = full_observation(truth.n)
    cfg = SolverConfig(lambda1=3.0, lambda2=2.0, max_iters=60)
    result = fit(A, omega, cfg)
    path = tmp_path / "seeded.fit"
    save_fit(result, path)
    loaded, names = load_fit(path)
    assert names is None
    assert np.array_equal(loaded.L_hat, result.L_hat)
    assert np.array_equal(loaded.S_hat, result.S_hat)
    assert np.array_equal(loaded.objective_trace, result.objective_trace)
    assert loaded.iterations == result.iterations
    assert loaded.converged == result.converged
    assert loaded.config_echo == cfg


def test_fit_version_mismatch():
    text = dumps_fit(zero_fit()).replace("gsbm-fit v1", "gsbm-fit v2")
    with pytest.raises(ParseError):
        loads_fit(text)


def test_fit_truncated_file():
    text = dumps_fit(zero_fit())
    truncated = "\n".join(text.splitlines()[:12])
    with pytest.raises(ParseError):
        loads_fit(truncated)


def test_fit_header_garbage():
    with pytest.raises(ParseError):
        loads_fit("not a fit file\n")


def test_format_pair_list_with_names():
    pairs = np.asarray([[0, 2], [1, 0]])
    assert format_pair_list(pairs) == "0 2\n1 0\n"
    assert format_pair_list(pairs, ["a", "b", "c"]) == "a c\nb a\n"
