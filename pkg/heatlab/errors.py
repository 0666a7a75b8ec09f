__all__ = [
    "HeatlabError",
    "ConfigError",
    "Infeasible",
    "NotSatisfiable",
    "BudgetExceeded",
    "NonConvergence",
    "InvalidSpec",
    "PNotInRegion",
    "AntipodeInRegion",
    "StudyFailed",
]


class HeatlabError(Exception):
    """Base class; `exit_code` is what the launcher exits with"""

    exit_code = 1


class ConfigError(HeatlabError):
    exit_code = 1


class Infeasible(HeatlabError):
    exit_code = 2


class NotSatisfiable(Infeasible):
    """The medium inequality between the two spherical domains fails"""


class BudgetExceeded(HeatlabError):
    exit_code = 3


class NonConvergence(HeatlabError):
    exit_code = 4


class InvalidSpec(HeatlabError):
    exit_code = 5


class PNotInRegion(InvalidSpec):
    pass


class AntipodeInRegion(InvalidSpec):
    pass


class StudyFailed(HeatlabError):
    """A study ran to completion but one of its checks failed"""

    exit_code = 1
