import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from districtbounds.instance import (Assignment, ValidationError,
                                     assignment_feasible, grid_instance,
                                     instance_from_dict, instance_to_dict,
                                     load_instance, population_feasible,
                                     save_instance)


def minimal_file(tmp_path, data):
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(data))
    return path


def test_load_minimal_path(tmp_path):
    path = minimal_file(tmp_path, {
        "k": 2, "tau": 1.0,
        "nodes": [{"id": "a", "pop": 10, "vap": 8, "bvap": 3},
                  {"id": "b", "pop": 12, "vap": 9, "bvap": 4}],
        "edges": [["a", "b"]],
    })
    inst = load_instance(path)
    assert inst.n == 2
    assert len(inst.edges) == 1
    assert not inst.has_votes


def test_invariant_violation_names_the_node(tmp_path):
    nodes = [{"id": i, "pop": 10, "vap": 8, "bvap": 2} for i in range(5)]
    nodes[3]["bvap"] = 9  # exceeds vap on node 3
    path = minimal_file(tmp_path, {
        "k": 1, "tau": 0.5, "nodes": nodes,
        "edges": [[i, i + 1] for i in range(4)],
    })
    with pytest.raises(ValidationError, match="node 3"):
        load_instance(path)


def test_grid_file_edge_count(tmp_path):
    inst = grid_instance(3, 3, 3, 0.1, 0)
    save_instance(inst, tmp_path / "g.json")
    loaded = load_instance(tmp_path / "g.json")
    assert loaded.n == 9
    assert len(loaded.edges) == 12  # 2 * 3 * (3 - 1)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        load_instance(path)


def test_disconnected_graph_rejected():
    data = {"k": 2, "tau": 1.0,
            "nodes": [{"id": i, "pop": 5} for i in range(4)],
            "edges": [[0, 1], [2, 3]]}
    with pytest.raises(ValidationError, match="connected"):
        instance_from_dict(data)


def test_duplicate_edge_rejected():
    data = {"k": 1, "tau": 1.0,
            "nodes": [{"id": 0, "pop": 5}, {"id": 1, "pop": 5}],
            "edges": [[0, 1], [1, 0]]}
    with pytest.raises(ValidationError, match="duplicate"):
        instance_from_dict(data)


def test_roundtrip_preserves_semantics(tmp_path):
    inst = grid_instance(2, 4, 2, 0.25, 11)
    save_instance(inst, tmp_path / "r.json")
    again = load_instance(tmp_path / "r.json")
    assert instance_to_dict(again) == instance_to_dict(inst)


def test_grid_deterministic():
    a = grid_instance(3, 3, 3, 0.1, 7)
    b = grid_instance(3, 3, 3, 0.1, 7)
    assert instance_to_dict(a) == instance_to_dict(b)


def test_grid_path_shape():
    inst = grid_instance(1, 2, 2, 1.0, 0)
    assert inst.n == 2 and len(inst.edges) == 1


def test_generator_validates_many_seeds():
    # construction runs the validator; all seeds must pass
    for seed in range(120):
        grid_instance(2, 3, 2, 0.5, seed)


def test_avg_pop_exact():
    inst = grid_instance(3, 3, 2, 0.1, 1)
    from fractions import Fraction

    assert inst.avg_pop == Fraction(sum(n.pop for n in inst.nodes), 2)


def test_population_feasibility_is_exact_at_boundary():
    # tau = 0 demands exactly average population in every district
    data = {"k": 2, "tau": 0.0,
            "nodes": [{"id": 0, "pop": 10}, {"id": 1, "pop": 10},
                      {"id": 2, "pop": 10}, {"id": 3, "pop": 10}],
            "edges": [[0, 1], [1, 2], [2, 3]]}
    inst = instance_from_dict(data)
    assert population_feasible(inst, Assignment([0, 0, 1, 1]))
    assert not population_feasible(inst, Assignment([0, 0, 0, 1]))


def test_assignment_feasible_checks_contiguity():
    inst = grid_instance(1, 4, 2, 1.0, 3)
    assert assignment_feasible(inst, Assignment([0, 0, 1, 1]))
    assert not assignment_feasible(inst, Assignment([0, 1, 0, 1]))


@settings(max_examples=60, deadline=None)
@given(rows=st.integers(1, 3), cols=st.integers(2, 3),
       seed=st.integers(0, 10_000))
def test_generated_instances_roundtrip(rows, cols, seed, tmp_path_factory):
    inst = grid_instance(rows, cols, min(2, rows * cols), 0.8, seed)
    again = instance_from_dict(instance_to_dict(inst))
    assert again.nodes == inst.nodes
    assert again.edges == inst.edges
