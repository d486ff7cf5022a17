import pytest

from codedmr.allocation import er_allocate
from codedmr.graphs import Graph

FIG3_EDGES = ((1, 5), (2, 6), (3, 4))


@pytest.fixture
def fig3_graph():
    """Six vertices, edges {1,5}, {2,6}, {3,4}: the minimal instance whose
    coded shuffle halves the uncoded load at K=3, r=2."""
    return Graph.from_edges(6, FIG3_EDGES)


@pytest.fixture
def fig3_alloc():
    return er_allocate(6, 3, 2)
