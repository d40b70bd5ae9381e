"""Report plumbing, doubled-sphere parity checks, and the check harness."""

from __future__ import annotations

import json

import numpy as np
import pytest

from simrad.grid import gaussian_phantom
from simrad.group import GroupElement
from simrad.verify import (
    ABLATION_FLOOR,
    INTERTWINING_TOL,
    ISOMETRY_TOL,
    SLICE_TOL,
    ReportEntry,
    ResidualReport,
    VerifyConfig,
    _axis_rotation,
    antipodal_image,
    apply_pi_hat_doubled,
    check_evenness_subspace,
    check_fiber_constancy,
    check_fourier_slice,
    check_intertwining,
    check_isometry,
    compact_phantom,
    describe_element,
    doubled_sphere_directions,
    make_entry,
    mixture_phantom,
    parity_split,
    run_all,
    smooth_doubled_field,
    standard_intertwining_sweep,
)
from simrad.xform import LineGeometry, PlaneGeometry, radon_plane, xray

# Permutation-level identities (roll / flip / exact-node sampling) hold to
# rounding; measured at or below 4e-15.
EXACT_TOL = 1e-12
# The production tolerances for the slice and covariance checks are
# calibrated for the default n=64, h=0.15 grids.  On the coarse unit-test
# grid (n=32, h=0.3) the projector and trilinear-mover discretization errors
# grow past them (measured slice 1.2e-2/2.1e-2, covariance 7.8e-2/9.0e-2),
# so these bounds only pin the checks structurally; the acceptance suite
# asserts the production tolerances at full scale.
COARSE_SLICE_TOL = 3e-2
COARSE_INTERTWINE_TOL = 1.5e-1

COARSE = VerifyConfig(
    n=32,
    spacing=0.3,
    n_theta=16,
    n_phi=16,
    n_t=65,
    t_max=4.8,
    n_u=48,
    u_max=4.8,
)


@pytest.fixture(scope="module")
def coarse_report() -> ResidualReport:
    config = VerifyConfig(
        n=32,
        spacing=0.3,
        n_theta=16,
        n_phi=16,
        n_t=65,
        t_max=4.8,
        n_u=48,
        u_max=4.8,
        checks=("isometry", "fiber", "evenness", "controls"),
    )
    return run_all(config)


# ---------------------------------------------------------------------------
# Report plumbing
# ---------------------------------------------------------------------------


def test_make_entry_pass_logic():
    assert make_entry("ok", 0.5, 1.0).passed
    assert not make_entry("high", 1.5, 1.0).passed
    assert not make_entry("inf", np.inf, np.inf).passed
    assert not make_entry("nan", np.nan, 1.0).passed
    # negative residuals against tolerance 0 encode "measured above a floor"
    assert make_entry("floor", -0.03, 0.0).passed


def test_report_lines_are_sorted_and_formatted():
    report = ResidualReport()
    report.add(make_entry("zeta", 0.25, 1.0))
    report.add(make_entry("alpha", np.inf, 0.0))
    assert report.lines() == [
        "CHECK alpha residual=inf tol=0 pass=0",
        "CHECK zeta residual=0.25 tol=1 pass=1",
    ]
    assert not report.all_passed


def test_report_json_is_strict():
    report = ResidualReport()
    report.add(make_entry("finite", 0.25, 1.0, context="c"))
    report.add(make_entry("errored", np.inf, 0.0))
    parsed = json.loads(report.to_json())
    assert parsed["all_passed"] is False
    by_name = {e["name"]: e for e in parsed["entries"]}
    assert by_name["finite"]["residual"] == 0.25
    assert by_name["finite"]["pass"] is True
    # strict JSON has no Infinity token: non-finite residuals are strings
    assert by_name["errored"]["residual"] == "inf"
    assert "Infinity" not in report.to_json()


def test_report_entry_is_frozen():
    entry = make_entry("x", 0.1, 1.0)
    with pytest.raises(AttributeError):
        entry.residual = 0.0  # type: ignore[misc]


def test_verify_config_geometries_mirror_fields():
    config = VerifyConfig()
    assert config.plane_geometry() == PlaneGeometry(32, 32, 129, 6.0)
    assert config.line_geometry() == LineGeometry(32, 32, 64, 64, 4.8)
    assert COARSE.plane_geometry() == PlaneGeometry(16, 16, 65, 4.8)
    assert COARSE.line_geometry() == LineGeometry(16, 16, 48, 48, 4.8)


def test_axis_rotation():
    assert np.allclose(
        _axis_rotation(2, np.pi / 2) @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0]
    )
    assert np.allclose(
        _axis_rotation(0, np.pi / 2) @ np.array([0.0, 1.0, 0.0]), [0.0, 0.0, 1.0]
    )
    with pytest.raises(ValueError):
        _axis_rotation(1, 0.5)


# ---------------------------------------------------------------------------
# Element sweep
# ---------------------------------------------------------------------------


def test_sweep_has_twelve_pinned_elements():
    sweep = standard_intertwining_sweep()
    assert len(sweep) == 12
    dilations = [g for g in sweep if g.a != 1.0]
    rotations = [g for g in sweep if g.a == 1.0 and not np.allclose(g.R, np.eye(3))]
    translations = [g for g in sweep if g.a == 1.0 and np.allclose(g.R, np.eye(3))]
    assert sorted(g.a for g in dilations) == [0.8, 1.25]
    assert all(np.linalg.norm(g.b) == 0.0 for g in dilations + rotations)
    angles = sorted(
        round(np.rad2deg(np.arccos((np.trace(g.R) - 1.0) / 2.0))) for g in rotations
    )
    assert angles == [15, 15, 30, 30, 45, 45]
    assert len(translations) == 4
    for g in translations:
        assert abs(np.linalg.norm(g.b) - 1.2) <= 6e-3


def test_describe_element():
    assert describe_element(GroupElement(np.zeros(3), np.eye(3), 1.25)) == (
        "a=1.25 rot=0deg |b|=0"
    )


# ---------------------------------------------------------------------------
# Individual checks at the coarse configuration
# ---------------------------------------------------------------------------


def test_fourier_slice_check_structural():
    mix = mixture_phantom(COARSE)
    for geometry, kind in ((COARSE.plane_geometry(), "plane"), (COARSE.line_geometry(), "line")):
        entry = check_fourier_slice(geometry, mix)
        assert entry.name == f"fourier_slice_{kind}"
        assert entry.tolerance == SLICE_TOL
        assert entry.residual <= COARSE_SLICE_TOL
        assert entry.passed == (entry.residual <= SLICE_TOL)


def test_isometry_check_passes_at_coarse_scale(coarse_report):
    by_name = {e.name: e for e in coarse_report.entries}
    for kind in ("plane", "line"):
        entry = by_name[f"isometry_{kind}"]
        assert entry.tolerance == ISOMETRY_TOL
        assert entry.passed
        assert entry.context.startswith("ratio=")


def test_fiber_constancy_check():
    entry = check_fiber_constancy(mixture_phantom(COARSE))
    assert entry.name == "fiber_constancy"
    assert entry.residual <= EXACT_TOL
    assert entry.passed


def test_intertwining_and_ablation_checks():
    compact = compact_phantom(COARSE)
    dilation = GroupElement(np.zeros(3), np.eye(3), 1.25)
    plane_geom = COARSE.plane_geometry()
    line_geom = COARSE.line_geometry()
    references = {
        id(plane_geom): radon_plane(compact, plane_geom),
        id(line_geom): xray(compact, line_geom),
    }
    for geometry, kind in ((plane_geom, "plane"), (line_geom, "line")):
        entry = check_intertwining(
            geometry, dilation, compact, reference=references[id(geometry)]
        )
        assert entry.name == f"intertwining_{kind}"
        assert entry.tolerance == INTERTWINING_TOL
        assert entry.residual <= COARSE_INTERTWINE_TOL
    # With the character ablated, the plane residual must clear the floor
    # (chi = a separates from 1 by 25%); the line character sqrt(a) moves only
    # 12% at a = 1.25, below the floor, which is why the harness pools the two.
    ablated_plane = check_intertwining(
        plane_geom, dilation, compact, ablate_character=True,
        reference=references[id(plane_geom)],
    )
    assert ablated_plane.name == "control_character_ablation_plane"
    assert ablated_plane.residual == pytest.approx(
        ABLATION_FLOOR - 0.2078, abs=5e-3
    )
    assert ablated_plane.passed
    ablated_line = check_intertwining(
        line_geom, dilation, compact, ablate_character=True,
        reference=references[id(line_geom)],
    )
    assert ablated_line.name == "control_character_ablation_line"
    assert not ablated_line.passed


# ---------------------------------------------------------------------------
# Doubled-sphere parity machinery
# ---------------------------------------------------------------------------


def test_antipodal_image_is_an_involution():
    F = smooth_doubled_field(COARSE.plane_geometry(), seed=3)
    assert np.array_equal(antipodal_image(antipodal_image(F)), F)


def test_antipodal_image_maps_negated_arguments():
    geometry = COARSE.plane_geometry()
    dirs = doubled_sphere_directions(geometry)
    u = np.array([0.3, -1.1, 0.7])
    F = (dirs @ u)[:, :, None] * np.exp(-((geometry.ts[None, None, :] - 0.3) ** 2))
    expected = (-dirs @ u)[:, :, None] * np.exp(
        -((-geometry.ts[None, None, :] - 0.3) ** 2)
    )
    assert np.max(np.abs(antipodal_image(F) - expected)) <= EXACT_TOL


def test_parity_split_reconstructs_and_commutes():
    F = smooth_doubled_field(COARSE.plane_geometry(), seed=5)
    even, odd = parity_split(F)
    assert np.max(np.abs(even + odd - F)) <= EXACT_TOL
    assert np.array_equal(antipodal_image(even), even)
    assert np.array_equal(antipodal_image(odd), -odd)


def test_doubled_action_identity_is_exact():
    geometry = COARSE.plane_geometry()
    F = smooth_doubled_field(geometry, seed=0)
    out = apply_pi_hat_doubled(GroupElement.identity(), F, geometry)
    assert np.max(np.abs(out - F)) <= EXACT_TOL


def test_evenness_subspace_check():
    geometry = COARSE.plane_geometry()
    F = smooth_doubled_field(geometry, seed=0)
    g = GroupElement(
        np.array([0.3, -0.15, 0.2]),
        _axis_rotation(2, np.deg2rad(30.0)) @ _axis_rotation(0, np.deg2rad(20.0)),
        0.9,
    )
    entries = check_evenness_subspace(F, geometry, g)
    assert [e.name for e in entries] == [
        "evenness_even_preserved",
        "evenness_odd_preserved",
        "evenness_parity_orthogonal",
    ]
    assert all(e.passed for e in entries)


def test_smooth_doubled_field_is_seed_deterministic():
    geometry = COARSE.plane_geometry()
    assert np.array_equal(
        smooth_doubled_field(geometry, 11), smooth_doubled_field(geometry, 11)
    )
    assert not np.array_equal(
        smooth_doubled_field(geometry, 11), smooth_doubled_field(geometry, 12)
    )


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def test_run_all_subset_passes_and_names_entries(coarse_report):
    names = sorted(e.name for e in coarse_report.entries)
    assert names == [
        "control_admissibility_rejects_gaussian",
        "control_character_ablation",
        "evenness_even_preserved",
        "evenness_odd_preserved",
        "evenness_parity_orthogonal",
        "fiber_constancy",
        "isometry_line",
        "isometry_plane",
    ]
    assert coarse_report.all_passed


def test_run_all_is_deterministic():
    config = VerifyConfig(
        n=32, spacing=0.3, n_theta=16, n_phi=16, n_t=65, t_max=4.8,
        n_u=48, u_max=4.8, checks=("fiber", "evenness"),
    )
    assert run_all(config).lines() == run_all(config).lines()


def test_run_all_volume_override_surfaces_reach_errors():
    # A field whose decay support exceeds the offset range cannot be projected;
    # with an explicit volume the harness must convert those reach guards into
    # failed *_error entries instead of aborting.
    config = VerifyConfig(
        n=32, spacing=0.3, n_theta=16, n_phi=16, n_t=65, t_max=4.0,
        n_u=40, u_max=4.0, checks=("isometry",),
    )
    report = run_all(config, volume=gaussian_phantom(32, 0.3, scale=1.2))
    assert not report.all_passed
    names = sorted(e.name for e in report.entries)
    assert names == [
        "forward_error", "forward_error", "isometry_error", "isometry_error",
    ]
    assert all(np.isinf(e.residual) and not e.passed for e in report.entries)


def test_run_all_volume_override_feeds_checks():
    config = VerifyConfig(
        n=32, spacing=0.3, n_theta=16, n_phi=16, n_t=65, t_max=4.8,
        n_u=48, u_max=4.8, checks=("fiber",),
    )
    report = run_all(config, volume=gaussian_phantom(32, 0.3, center=[0.5, 0.2, -0.4]))
    assert [e.name for e in report.entries] == ["fiber_constancy"]
    assert report.all_passed
