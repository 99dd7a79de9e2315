import pytest

import fracspec as fs


@pytest.fixture(scope="session")
def scale4():
    return fs.get_system("scale4")


@pytest.fixture(scope="session")
def scale2():
    return fs.get_system("scale2")


@pytest.fixture(scope="session")
def triadic():
    return fs.get_system("triadic")


@pytest.fixture(scope="session")
def eiffel2():
    return fs.eiffel_system(2)


@pytest.fixture(scope="session")
def planar():
    return fs.get_system("planar-collapse")


@pytest.fixture(scope="session")
def mu4(scale4):
    return fs.SelfSimilarMeasure(scale4)


@pytest.fixture(scope="session")
def mu2(scale2):
    return fs.SelfSimilarMeasure(scale2)


@pytest.fixture(scope="session")
def mu3(triadic):
    return fs.SelfSimilarMeasure(triadic)


@pytest.fixture(scope="session")
def mu34(mu3, mu4):
    return fs.convolve(mu3, mu4)
