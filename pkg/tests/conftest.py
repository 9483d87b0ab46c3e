import pytest

from turing_transformer import machines
from turing_transformer.compiler import compile_machine


@pytest.fixture(scope="session")
def bundled():
    return machines.all_machines()


@pytest.fixture(scope="session")
def inc(bundled):
    return bundled["unary_increment"]


@pytest.fixture(scope="session")
def inc_program(inc):
    return compile_machine(inc, 3)
