import pytest

from districtbounds.instance import Instance, Node, grid_instance
from districtbounds.probit import objective_spec


@pytest.fixture(scope="session")
def bvap_spec():
    return objective_spec("bvap")


@pytest.fixture(scope="session")
def bvap_curve(bvap_spec):
    return bvap_spec.curve


@pytest.fixture(scope="session")
def cpvi_spec():
    return objective_spec("cpvi")


@pytest.fixture
def two_node():
    """Two nodes whose only feasible 2-partition is the forced split."""
    return Instance(
        nodes=(Node(0, pop=100, vap=100, bvap=60),
               Node(1, pop=100, vap=100, bvap=20)),
        edges=((0, 1),),
        k=2,
        tau=0.5,
    )


@pytest.fixture(scope="session")
def grid33():
    return grid_instance(3, 3, 2, 0.2, 7)
