# tests/test_spectrum.py

import numpy as np
import pytest

from kato_scat.errors import InvalidRegion
from kato_scat.potential.oracle import bound_state_count, tune_singular_step
from kato_scat.potential.potential import Potential
from kato_scat.spectrum.classifier import Verdict, similarity_verdict
from kato_scat.spectrum.report import SingularityCandidate, SpectralReport, build_report, scan_singularities
from kato_scat.spectrum.zeros import JostEvaluator, Region, count_zeros, newton_refine, onset_depth


def _report(**changes):
    fields = dict(eigen_k=[], singularity_scan=[], kato_moment=0.5, region=None, certified=True)
    fields.update(changes)
    return SpectralReport(**fields)


def test_region_geometry():
    region = Region(-1.0, 1.0, 0.5, 2.0)
    assert region.width == 2.0
    assert region.height == 1.5
    assert region.center == complex(0.0, 1.25)
    corners = region.boundary(np.array([0.0, 1.0, 2.0, 3.0]))
    np.testing.assert_allclose(corners, [-1 + 0.5j, 1 + 0.5j, 1 + 2j, -1 + 2j])
    assert sum(child.width * child.height for child in region.quadrisect()) == pytest.approx(3.0)


def test_region_too_close_to_axis(deep_well):
    with pytest.raises(InvalidRegion):
        count_zeros(deep_well, Region(-1.0, 1.0, 0.001, 1.0))


def test_count_zeros_deep_well(deep_well):
    assert count_zeros(deep_well, Region(-1.0, 1.0, 0.05, 1.0)) == 1
    assert count_zeros(deep_well, Region(0.5, 1.5, 0.05, 1.0)) == 0


def test_count_zeros_zero_potential(zero_potential):
    assert count_zeros(zero_potential, Region(-1.0, 1.0, 0.05, 1.0)) == 0


@pytest.mark.parametrize("depth", [10.0, 30.0])
def test_count_matches_bound_state_count(depth):
    region = Region(-0.5, 0.5, 0.02, 6.0)
    assert count_zeros(Potential.step(-depth, 1.0), region) == bound_state_count(depth)


def test_newton_refine_finds_step_zero(deep_well, deep_well_k0):
    found = newton_refine(JostEvaluator(deep_well), 0.3j)
    assert found is not None
    assert abs(found[0] - deep_well_k0) < 1e-9


def test_weak_well_is_similar_to_free(weak_well):
    report = build_report(weak_well)
    assert report.kato_moment == pytest.approx(0.95)
    assert report.certified
    assert report.eigen_k == []
    assert report.singularity_scan == []
    assert report.verdict == Verdict.SIMILAR_TO_FREE.value


def test_deep_well_has_one_eigenvalue(deep_well, deep_well_k0):
    report = build_report(deep_well)
    assert report.verdict == Verdict.HAS_DISCRETE_SPECTRUM.value
    assert len(report.eigen_k) == 1
    zero = report.eigen_k[0]
    assert zero.multiplicity == 1
    assert abs(zero.k0 - deep_well_k0) < 1e-8
    assert report.eigenvalues[0] == pytest.approx(deep_well_k0 ** 2, abs=1e-8)


def test_zero_potential_report(zero_potential):
    report = build_report(zero_potential)
    assert report.verdict == Verdict.SIMILAR_TO_FREE.value
    assert report.kato_moment == 0.0


def test_scan_flags_tuned_real_zero():
    candidates = scan_singularities(tune_singular_step(1.0), 2.0)
    assert any(c.confirmed and abs(c.k - 1.0) < 1e-6 for c in candidates)


def test_classifier_rules():
    candidate = SingularityCandidate(k=1.0, abs_e=1e-12, confirmed=True)
    unconfirmed = SingularityCandidate(k=1.0, abs_e=1e-4, confirmed=False)
    assert similarity_verdict(_report()) == Verdict.SIMILAR_TO_FREE.value
    assert similarity_verdict(_report(certified=False)) == Verdict.UNDETERMINED.value
    assert similarity_verdict(_report(singularity_scan=[candidate])) == Verdict.HAS_SPECTRAL_SINGULARITIES.value
    assert similarity_verdict(_report(singularity_scan=[unconfirmed])) == Verdict.UNDETERMINED.value
    assert similarity_verdict(_report(near_axis_count=-1)) == Verdict.UNDETERMINED.value
    assert similarity_verdict(_report(eigen_k=["k0"])) == Verdict.HAS_DISCRETE_SPECTRUM.value


@pytest.mark.slow
def test_onset_between_two_point_four_and_two_point_five():
    region = Region(-0.5, 0.5, 0.002, 3.5)
    onset = onset_depth(lambda depth: Potential.step(-depth, 1.0), 2.0, 3.0, region, delta=0.002)
    assert 2.4 < onset < 2.5
