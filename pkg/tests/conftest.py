import pytest

from kp40.ksset import build_graph, canonical_set, enumerate_octads


@pytest.fixture(scope="session")
def kset():
    return canonical_set()


@pytest.fixture(scope="session")
def graph(kset):
    return build_graph(kset)


@pytest.fixture(scope="session")
def octads(graph):
    return enumerate_octads(graph)
