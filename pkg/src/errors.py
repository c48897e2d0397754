"""
Exception hierarchy shared by every module.

Each error carries the exit code the command line reports for it and the name
of the module that raised it, so failures surface as "<module>: <message>".

"""


class MedTransportError(Exception):
    exit_code = 1
    module = "medtransport"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return "{}: {}".format(self.module, super().__str__())


class ConfigError(MedTransportError):
    exit_code = 2
    module = "cli"


class SchemaError(MedTransportError):
    exit_code = 3
    module = "extractors"


class DataValidationError(MedTransportError):
    exit_code = 3
    module = "extractors"

    def __init__(self, message, line_number=None, module=None):
        if line_number is not None:
            message = "line {}: {}".format(line_number, message)
        super().__init__(message, module=module)
        self.line_number = line_number


class EstimationError(MedTransportError):
    exit_code = 4
    module = "tmle"


class SeparationError(EstimationError):
    module = "nuisance"


class ConvergenceError(EstimationError):
    module = "nuisance"


class SingularDesignError(EstimationError):
    module = "nuisance"


class DegenerateDensityError(EstimationError):
    module = "nuisance"


class PositivityError(EstimationError):

    def __init__(self, factor, message=None):
        super().__init__(message or "positivity violated: {} is zero".format(factor))
        self.factor = factor


class TargetingError(EstimationError):
    pass


class StratumError(EstimationError):
    pass


class CalibrationError(EstimationError):
    module = "simulation"


class BootstrapError(EstimationError):
    module = "sensitivity"


class DegenerateWeightsError(EstimationError):
    module = "sensitivity"


class SensitivityDomainError(EstimationError):
    module = "sensitivity"
