# src/kato_scat/spectrum/classifier.py

from enum import Enum


class Verdict(str, Enum):
    SIMILAR_TO_FREE = "similar_to_free"
    HAS_DISCRETE_SPECTRUM = "has_discrete_spectrum"
    HAS_SPECTRAL_SINGULARITIES = "has_spectral_singularities"
    UNDETERMINED = "undetermined"


class SimilarityClassifier:
    """
    Turns a spectral report into a similarity verdict.

    Without spectral singularities the operator is similar to the free one exactly when it
    has no eigenvalues; anything the report could not settle stays undetermined.
    """

    def classify(self, report) -> str:
        """
        Args:
            report (SpectralReport): zeros, real-axis scan and certification flag.

        Returns:
            str: one of the Verdict values.
        """
        if not report.certified:
            return Verdict.UNDETERMINED.value

        if any(candidate.confirmed for candidate in report.singularity_scan):
            return Verdict.HAS_SPECTRAL_SINGULARITIES.value

        if report.eigen_k:
            return Verdict.HAS_DISCRETE_SPECTRUM.value

        if report.singularity_scan or report.near_axis_count != 0:
            return Verdict.UNDETERMINED.value

        return Verdict.SIMILAR_TO_FREE.value


def similarity_verdict(report) -> str:
    return SimilarityClassifier().classify(report)
