# src/kato_scat/errors.py

"""Exception hierarchy shared by every kato_scat module and the command line."""

EXIT_TOLERANCE_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NOT_CONVERGED = 3


class KatoScatError(Exception):
    """Base class. `reason` is the machine-readable tag written to JSON reports."""

    exit_code = EXIT_INPUT_ERROR
    reason = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.reason)
        self.message = message or self.reason

    def to_dict(self) -> dict:
        return {"status": "error", "reason": self.reason, "message": self.message}


class ConfigError(KatoScatError):
    reason = "config_error"


class NonIntegrableTail(KatoScatError):
    reason = "non_integrable_tail"


class InvalidRegion(KatoScatError):
    reason = "invalid_region"


class GridTooCoarse(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "grid_too_coarse"


class TailTooShort(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "tail_too_short"


class ZeroOnContour(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "zero_on_contour"


class QuadratureNotConverged(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "quadrature_not_converged"


class MultiplicityAboveOne(KatoScatError):
    """Recorded as a warning on a zero cluster; raised only where a simple zero is required."""

    exit_code = EXIT_NOT_CONVERGED
    reason = "multiplicity_above_one"


class AtEigenvalue(KatoScatError):
    reason = "at_eigenvalue"


class TooCloseToContinuousSpectrum(KatoScatError):
    reason = "too_close_to_continuous_spectrum"


class JordanBlockDetected(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "jordan_block_detected"


class NearSingularity(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "near_singularity"


class AliasingDetected(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "aliasing_detected"


class StepTooLarge(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "step_too_large"


class DomainEscape(KatoScatError):
    exit_code = EXIT_NOT_CONVERGED
    reason = "domain_escape"

    def __init__(self, message: str = "", suggested_x_max: float | None = None):
        super().__init__(message)
        self.suggested_x_max = suggested_x_max

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload["suggested_x_max"] = self.suggested_x_max
        return payload
