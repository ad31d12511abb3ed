import pytest

from mesop import _kernels


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    """Pay the JIT cost once up front so per-test timings are honest."""
    _kernels.warmup()
