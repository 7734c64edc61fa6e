import pytest

from ep.config import get_settings

from .builders import dove_frames, one_frame_eos


@pytest.fixture(autouse=True)
def fresh_settings():
    # settings are cached per process; tests that patch EP_* need a re-read
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def eos_frame():
    return one_frame_eos()


@pytest.fixture
def dove():
    return dove_frames()
