"""GLCM matrices, features, confidence ellipses, directory comparison."""

import json
import math

import numpy as np
import pytest

from veintree.metrics import (
    ConfidenceEllipse,
    GlcmSpec,
    chi2_quantile_2dof,
    confidence_ellipse,
    directory_stats,
    glcm,
    glcm_features,
    quantize,
)
from veintree.model import VeinTreeError
from veintree.pngio import save_png

L = 16  # default level count


def checkerboard(size=64):
    """Alternating darkest/brightest quantization bins."""
    img = np.indices((size, size)).sum(axis=0) % 2
    return (img * 255).astype(np.uint8)


class TestGlcm:
    def test_constant_image_single_cell(self):
        img = np.full((32, 32), 100, dtype=np.uint8)
        mats = glcm(img, GlcmSpec())
        for mat in mats:
            assert mat.sum() == pytest.approx(1.0)
            assert (mat == 1.0).sum() == 1
            level = (100 * L) // 256
            assert mat[level, level] == 1.0

    def test_checkerboard_two_by_two(self):
        img = np.array([[0, 255], [255, 0]], dtype=np.uint8)
        (mat,) = glcm(img, GlcmSpec(offsets=((1, 0),)))
        assert mat[0, L - 1] == pytest.approx(0.5)
        assert mat[L - 1, 0] == pytest.approx(0.5)
        assert mat.sum() == pytest.approx(1.0)

    def test_entries_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            img = rng.integers(0, 256, size=(40, 40), dtype=np.uint8)
            for mat in glcm(img, GlcmSpec()):
                assert mat.sum() == pytest.approx(1.0, abs=1e-12)

    def test_transpose_swaps_offsets(self):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(30, 44), dtype=np.uint8)
        spec_a = GlcmSpec(offsets=((2, 1),))
        spec_b = GlcmSpec(offsets=((1, 2),))
        (m_orig,) = glcm(img, spec_a)
        (m_t,) = glcm(img.T, spec_b)
        assert np.array_equal(m_orig, m_t)

    def test_symmetric_matrices_exactly_symmetric(self):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 256, size=(50, 50), dtype=np.uint8)
        for mat in glcm(img, GlcmSpec(symmetric=True)):
            assert np.array_equal(mat, mat.T)

    def test_offset_larger_than_image_rejected(self):
        img = np.zeros((4, 4), dtype=np.uint8)
        with pytest.raises(ValueError, match="smaller than offset"):
            glcm(img, GlcmSpec(offsets=((5, 0),)))

    def test_quantization_is_uniform(self):
        vals = np.arange(256, dtype=np.uint8).reshape(16, 16)
        q = quantize(vals, 16)
        assert q.min() == 0 and q.max() == 15
        assert (np.bincount(q.ravel()) == 16).all()


class TestGlcmFeatures:
    def test_constant_image_analytic(self):
        img = np.full((32, 32), 77, dtype=np.uint8)
        feats = glcm_features(glcm(img, GlcmSpec()))
        assert feats.contrast == 0.0
        assert feats.energy == 1.0
        assert feats.homogeneity == 1.0
        assert feats.correlation == 0.0  # degenerate marginals

    def test_checkerboard_hand_values(self):
        img = checkerboard()
        feats = glcm_features(glcm(img, GlcmSpec(offsets=((1, 0),))))
        assert feats.contrast == pytest.approx((L - 1) ** 2)
        assert feats.energy == pytest.approx(0.5)
        assert feats.homogeneity == pytest.approx(1.0 / (1.0 + (L - 1) ** 2))
        assert feats.correlation == pytest.approx(-1.0)

    def test_feature_ranges(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            img = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
            feats = glcm_features(glcm(img, GlcmSpec()))
            assert 0.0 < feats.energy <= 1.0
            assert 0.0 < feats.homogeneity <= 1.0
            assert feats.contrast >= 0.0
            assert -1.0 <= feats.correlation <= 1.0

    def test_inversion_invariance_on_bin_centered_ramp(self):
        # Values at bin centers invert to exact index reversal, leaving
        # contrast and homogeneity unchanged.
        base = (8 + 16 * (np.indices((32, 32)).sum(axis=0) % 16)).astype(np.uint8)
        inverted = (255 - base).astype(np.uint8)
        f_base = glcm_features(glcm(base, GlcmSpec()))
        f_inv = glcm_features(glcm(inverted, GlcmSpec()))
        assert f_base.contrast == pytest.approx(f_inv.contrast, rel=1e-12)
        assert f_base.homogeneity == pytest.approx(f_inv.homogeneity, rel=1e-12)


class TestConfidenceEllipse:
    def test_chi2_reference_value(self):
        assert chi2_quantile_2dof(0.95) == pytest.approx(5.991, abs=5e-4)

    def test_axis_aligned_cloud_matches_eigen_oracle(self):
        rng = np.random.default_rng(4)
        theta = rng.uniform(0, 2 * np.pi, 400)
        pts = np.column_stack(
            [3.0 * np.cos(theta), np.sin(theta)]
        ) + rng.normal(0, 0.05, (400, 2))
        ell = confidence_ellipse(pts, 0.95)
        lam, _ = np.linalg.eigh(np.cov(pts, rowvar=False, ddof=1))
        expected = np.sqrt(chi2_quantile_2dof(0.95) * lam[::-1])
        assert np.allclose(ell.semi_axes, expected, rtol=1e-9)
        assert min(abs(ell.angle), abs(ell.angle - np.pi)) < 0.1

    def test_isotropic_gaussian_axis_ratio(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(0, 1, size=(10_000, 2))
        ell = confidence_ellipse(pts, 0.95)
        ratio = ell.semi_axes[1] / ell.semi_axes[0]
        assert 0.9 <= ratio <= 1.1

    def test_translation_equivariance(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(0, 1, size=(300, 2)) @ np.array([[2.0, 0.3], [0.0, 0.7]])
        shift = np.array([13.5, -2.25])
        e0 = confidence_ellipse(pts)
        e1 = confidence_ellipse(pts + shift)
        assert np.allclose(e1.center - e0.center, shift, atol=1e-9)
        assert np.allclose(e1.semi_axes, e0.semi_axes, atol=1e-9)
        assert abs(e1.angle - e0.angle) < 1e-9

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(7)
        pts = rng.normal(0, 1, size=(500, 2)) @ np.array([[3.0, 0.0], [0.0, 0.5]])
        phi = 0.7
        rot = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
        e0 = confidence_ellipse(pts)
        e1 = confidence_ellipse(pts @ rot.T)
        assert np.allclose(e1.semi_axes, e0.semi_axes, atol=1e-9)
        delta = (e1.angle - e0.angle - phi) % math.pi
        assert min(delta, math.pi - delta) < 1e-9

    def test_collinear_cloud_rejected(self):
        pts = np.column_stack([np.arange(10.0), 2.0 * np.arange(10.0)])
        with pytest.raises(VeinTreeError, match="degenerate"):
            confidence_ellipse(pts)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            confidence_ellipse(np.zeros((2, 2)))


def textured_image(rng, base):
    noise = rng.normal(0, 25, size=(32, 32))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


class TestDirectoryStats:
    def _fill(self, directory, rng, base, n=120):
        directory.mkdir(parents=True, exist_ok=True)
        for i in range(n):
            save_png(directory / f"{i:03d}.png", textured_image(rng, base))

    def test_self_comparison_containment_near_level(self, tmp_path):
        rng = np.random.default_rng(8)
        d = tmp_path / "a"
        self._fill(d, rng, base=120.0)
        report = directory_stats(d, d, level=0.95)
        assert abs(report["overlap"]["a_in_b"] - 0.95) <= 0.1
        assert abs(report["overlap"]["b_in_a"] - 0.95) <= 0.1

    def test_disjoint_textures_zero_containment(self, tmp_path):
        # Smooth vs harshly dithered sets sit far apart in feature space.
        rng = np.random.default_rng(9)
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        for i in range(12):
            smooth = np.clip(
                100 + rng.normal(0, 8 + i, (32, 32)), 0, 255
            ).astype(np.uint8)
            save_png(a / f"{i}.png", smooth)
            dither = checkerboard(32).astype(np.int64)
            dither = np.clip(dither + rng.integers(-6 - 4 * i, 7 + 4 * i, (32, 32)), 0, 255)
            save_png(b / f"{i}.png", dither.astype(np.uint8))
        report = directory_stats(a, b)
        assert report["overlap"]["a_in_b"] == 0.0
        assert report["overlap"]["b_in_a"] == 0.0

    def test_report_schema_and_skip_count(self, tmp_path):
        rng = np.random.default_rng(10)
        d = tmp_path / "a"
        self._fill(d, rng, base=90.0, n=10)
        (d / "broken.png").write_bytes(b"not a png")
        report = directory_stats(d, d)
        assert set(report) == {"spec", "dirs", "overlap", "excluded_metrics"}
        for entry in report["dirs"]:
            assert set(entry) == {"path", "n", "skipped", "mean", "cov", "ellipse"}
            assert entry["n"] == 10
            assert entry["skipped"] == 1
        assert set(report["overlap"]) == {"a_in_b", "b_in_a"}
        json.dumps(report)  # must be JSON-serializable

    def test_too_few_images_rejected(self, tmp_path):
        d = tmp_path / "tiny"
        d.mkdir()
        save_png(d / "0.png", np.zeros((16, 16), dtype=np.uint8))
        with pytest.raises(VeinTreeError, match="at least 3"):
            directory_stats(d, d)
