"""Exception types shared across the toolkit."""


class PhotonSubError(Exception):
    """Base class for all toolkit errors."""


class CutoffError(PhotonSubError):
    """Fock cutoff too small for the requested construction."""


class DegenerateHeraldError(PhotonSubError):
    """Herald probability vanishes; conditional state undefined."""


class ModelViolationError(PhotonSubError):
    """Inputs outside the Gaussian squeezing-plus-loss model."""


class GridError(PhotonSubError):
    """Time/frequency grid too short, mismatched, or undersampled."""


class ConvergenceError(PhotonSubError):
    """Iterative estimator failed to converge."""


class TomographyError(PhotonSubError):
    """Maximum-likelihood iteration hit a numerical pathology."""


class ConfigError(PhotonSubError):
    """Scenario configuration failed validation."""
