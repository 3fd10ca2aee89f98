import pytest

from ggmtree import (
    SOS,
    GGMSpec,
    PinnedMeasureSpec,
    build_layer_kernel,
    cayley_ball,
    closed_form_q2_sos,
    fuzzy_transform,
)


@pytest.fixture(scope="session")
def sos2():
    return SOS(2.0)


@pytest.fixture(scope="session")
def upper_law():
    # nontrivial period-2 law on the binary tree at beta = 2, a_1 = u**2
    return closed_form_q2_sos(2.0)[1]


@pytest.fixture(scope="session")
def kernel(sos2, upper_law):
    return build_layer_kernel(sos2, upper_law)


@pytest.fixture(scope="session")
def chain(kernel):
    return fuzzy_transform(kernel)


@pytest.fixture(scope="session")
def ball1():
    return cayley_ball(2, 1)


@pytest.fixture(scope="session")
def ball2():
    return cayley_ball(2, 2)


@pytest.fixture(scope="session")
def pinned(kernel, ball2):
    return PinnedMeasureSpec(kernel, ball2, 0, 0)


@pytest.fixture(scope="session")
def ggm(kernel, chain, ball2):
    return GGMSpec(kernel, chain, ball2)
