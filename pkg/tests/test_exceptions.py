import pytest

from acic import ACICException, AssumptionError, ConvergenceError, SolverInputError

def raise_ACICException():
    raise ACICException('test')

def test_ACICException():
    with pytest.raises(ACICException):
        raise_ACICException()

@pytest.mark.parametrize('exception_class', [AssumptionError, ConvergenceError, SolverInputError])
def test_subclasses_are_ACICExceptions(exception_class):
    with pytest.raises(ACICException, match='solver said no'):
        raise exception_class('solver said no')

def test_AssumptionError_witness():
    error = AssumptionError('A.1 fails', 'A.1', {'components': [[0], [1]]})

    assert str(error) == 'A.1 fails'
    assert error.assumption == 'A.1'
    assert error.witness == {'components': [[0], [1]]}

def test_AssumptionError_defaults():
    error = AssumptionError('not reachable')

    assert error.assumption is None
    assert error.witness is None
