import pytest

from src.utils.field_core import find_generator
from src.utils.spectra import AdditiveCharacter


@pytest.fixture
def ctx7():
    return find_generator(7)


@pytest.fixture
def ctx11():
    return find_generator(11)


@pytest.fixture
def ctx13():
    return find_generator(13)


@pytest.fixture
def character():
    """Factory for psi_c over F_p."""

    def make(p: int, c: int = 1) -> AdditiveCharacter:
        return AdditiveCharacter.create(p, c)

    return make
