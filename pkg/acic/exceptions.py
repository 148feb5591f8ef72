"""
Custom ACIC Exceptions.
"""

class ACICException(Exception):
    """
    Generic ACICException
    """

class ConvergenceError(ACICException):
    """
    A solver did not reach its tolerance within its iteration cap, or two
    independent computations of the same quantity disagree.
    """

class AssumptionError(ACICException):
    """
    A structural hypothesis on the Markov model does not hold
    (irreducibility, reachability of the exterior of a domain).

    Parameters
    ----------
    message : str
        Human readable description of the violated assumption.
    assumption : str, optional
        Short name of the violated assumption, for example ``A.1``.
    witness : object, optional
        Data demonstrating the violation (component lists, offending states).
    """

    def __init__(self, message, assumption=None, witness=None):
        super().__init__(message)
        self.__assumption = assumption
        self.__witness = witness

    @property
    def assumption(self):
        """
        Returns
        -------
        str or None
            Short name of the violated assumption.
        """
        return self.__assumption

    @property
    def witness(self):
        """
        Returns
        -------
        object
            Data demonstrating the violation.
        """
        return self.__witness

class SolverInputError(ACICException):
    """
    Inputs are well formed but outside the range a solver accepts, for example
    a running-cost shift at or above the uncontrolled average, or an oracle
    enumeration that exceeds its budget.
    """
