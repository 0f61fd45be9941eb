import pytest

from dspn.ndgrad import available_backends, use_backend


@pytest.fixture(params=available_backends())
def kernel_backend(request):
    """Run the decorated test once per built kernel backend."""
    with use_backend(request.param):
        yield request.param
