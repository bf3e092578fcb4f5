'''
Error types. Each family maps to a CLI exit code.
'''

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4


class StereoLCAError(Exception):
    exit_code = 1


class ConfigError(StereoLCAError, ValueError):
    exit_code = EXIT_CONFIG


class DataError(StereoLCAError, ValueError):
    exit_code = EXIT_DATA


class DivergenceError(StereoLCAError, ArithmeticError):
    exit_code = EXIT_DIVERGENCE

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class UnsupportedImageError(DataError):
    pass


class ShapeError(DataError):
    pass


class AngleBudgetError(DataError):
    pass


class MetadataMismatchError(DataError):
    pass


class InsufficientDataError(DataError):
    pass


class FitError(DataError):
    pass
