"""Dataset pipeline and CLI: layout, manifest, determinism, exit codes."""

import hashlib
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from veintree.cli import cli_main
from veintree.config import (
    ConfigError,
    GenerationConfig,
    apply_overrides,
    config_from_mapping,
    load_config,
)
from veintree.pipeline import build_dataset, generate_identity
from veintree.pngio import load_png
from veintree.variation import read_noise_file


def small_config(out, **overrides):
    defaults = dict(
        seed=77,
        n_identities=3,
        samples_per_identity=2,
        output_dir=str(out),
    )
    defaults.update(overrides)
    return GenerationConfig(**defaults)


def tree_digest(root):
    """Stable digest of every file under root (paths + bytes)."""
    h = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


class TestGenerateIdentity:
    def test_single_sample(self):
        cfg = GenerationConfig(seed=1, n_identities=1, samples_per_identity=1)
        result = generate_identity(0, cfg)
        assert len(result.samples) == 1
        assert result.samples[0].image.shape == (128, 128)

    def test_same_identity_reproducible(self):
        cfg = GenerationConfig(seed=2, n_identities=1, samples_per_identity=3)
        a = generate_identity(5, cfg)
        b = generate_identity(5, cfg)
        for s1, s2 in zip(a.samples, b.samples):
            assert np.array_equal(s1.image, s2.image)
        assert a.tree_edges == b.tree_edges

    def test_samples_share_identity_but_differ(self):
        cfg = GenerationConfig(seed=3, n_identities=1, samples_per_identity=2)
        result = generate_identity(1, cfg)
        img_a, img_b = (s.image for s in result.samples)
        assert not np.array_equal(img_a, img_b)
        dark_a = int((img_a < 200).sum())
        dark_b = int((img_b < 200).sum())
        assert abs(dark_a - dark_b) < 0.3 * max(dark_a, dark_b)

    def test_identity_independent_of_other_ids(self):
        cfg = GenerationConfig(seed=4, n_identities=10, samples_per_identity=1)
        alone = generate_identity(7, cfg)
        cfg_more = GenerationConfig(seed=4, n_identities=99, samples_per_identity=1)
        among_others = generate_identity(7, cfg_more)
        assert np.array_equal(alone.samples[0].image, among_others.samples[0].image)

    def test_family_distribution_respected(self):
        cfg = GenerationConfig(
            seed=5, n_identities=1, samples_per_identity=1,
            family_distribution=(0.0, 0.0, 1.0, 0.0),
        )
        for ident in range(5):
            assert generate_identity(ident, cfg).family == "C"


class TestBuildDataset:
    def test_layout_and_manifest(self, tmp_path):
        out = tmp_path / "d"
        manifest = build_dataset(small_config(out))
        pngs = sorted(out.rglob("*.png"))
        assert len(pngs) == 6
        assert len(manifest.records) == 6
        data = json.loads((out / "manifest.json").read_text())
        assert set(data) == {"config", "records", "version"}
        assert len(data["records"]) == 6
        rec = data["records"][0]
        assert set(rec) == {
            "identity_id", "trunk_family", "sample_index", "theta_z",
            "w_random", "augment_seed", "path",
        }
        # Every PNG on disk appears in exactly one record and vice versa.
        on_disk = {str(p.relative_to(out)) for p in pngs}
        in_manifest = [r["path"] for r in data["records"]]
        assert sorted(in_manifest) == sorted(on_disk)
        assert len(set(in_manifest)) == len(in_manifest)
        for r in data["records"]:
            assert -3.0 <= r["theta_z"] <= 3.0
            assert 0.8 <= r["w_random"] <= 1.0

    def test_rerun_byte_identical(self, tmp_path):
        # Identical config twice (same output path: it is part of the
        # manifest's config snapshot).
        out = tmp_path / "d"
        build_dataset(small_config(out))
        first = tree_digest(out)
        shutil.rmtree(out)
        build_dataset(small_config(out))
        assert tree_digest(out) == first

    def test_workers_do_not_change_output(self, tmp_path):
        out = tmp_path / "d"
        build_dataset(small_config(out))
        serial = tree_digest(out)
        shutil.rmtree(out)
        cfg = small_config(out, workers=2)
        # The worker count lives in the config snapshot; compare image and
        # record bytes instead of whole-tree digests.
        manifest = build_dataset(cfg)
        parallel_pngs = {
            str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*.png"))
        }
        shutil.rmtree(out)
        build_dataset(small_config(out))
        serial_pngs = {
            str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*.png"))
        }
        assert parallel_pngs == serial_pngs
        assert [r.path for r in manifest.records] == sorted(
            r.path for r in manifest.records
        )
        assert tree_digest(out) == serial

    def test_optional_outputs(self, tmp_path):
        out = tmp_path / "d"
        cfg = small_config(out, emit_noise=True, emit_debug_trees=True)
        build_dataset(cfg)
        noise_files = sorted((out / "noise").glob("*.pvnz"))
        tree_files = sorted((out / "trees").glob("*.edges.txt"))
        assert len(noise_files) == 3
        assert len(tree_files) == 3
        samples = read_noise_file(noise_files[0])
        assert samples.shape == (cfg.noise.n_samples, cfg.noise.dim)

    def test_images_are_128_uint8(self, tmp_path):
        out = tmp_path / "d"
        build_dataset(small_config(out))
        img = load_png(next(out.rglob("*.png")))
        assert img.shape == (128, 128)
        assert img.dtype == np.uint8


class TestConfig:
    def test_defaults_mirror_dataset_shape(self):
        cfg = GenerationConfig()
        assert cfg.n_identities == 4000
        assert cfg.samples_per_identity == 7

    def test_toml_round_trip(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(
            "\n".join(
                [
                    "seed = 9",
                    "n_identities = 2",
                    "samples_per_identity = 3",
                    'output_dir = "out"',
                    "[growth]",
                    "n_points = 10",
                    "[view]",
                    "theta_range = [-2.0, 2.0]",
                    "[noise]",
                    "dim = 64",
                ]
            )
        )
        cfg = load_config(path)
        assert cfg.seed == 9
        assert cfg.growth.n_points == 10
        assert cfg.view.theta_range == (-2.0, 2.0)
        assert cfg.noise.dim == 64
        assert cfg.radius.r0 == 0.4  # untouched defaults

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            config_from_mapping({"sniff": 1})
        with pytest.raises(ConfigError, match="unknown key"):
            config_from_mapping({"growth": {"n_pionts": 10}})

    def test_invalid_values_rejected(self):
        with pytest.raises(ConfigError):
            config_from_mapping({"n_identities": 0})
        with pytest.raises(ConfigError):
            config_from_mapping({"family_distribution": [0, 0, 0, 0]})

    def test_overrides_win(self):
        cfg = apply_overrides(GenerationConfig(), seed=123, n_identities=None)
        assert cfg.seed == 123
        assert cfg.n_identities == 4000


class TestCli:
    def test_build_success(self, tmp_path):
        out = tmp_path / "d"
        code = cli_main(
            ["build", "--ids", "2", "--samples", "2", "--seed", "42",
             "--out", str(out)]
        )
        assert code == 0
        assert len(sorted(out.rglob("*.png"))) == 4
        assert (out / "manifest.json").exists()

    def test_usage_error_exit_1(self):
        assert cli_main(["build", "--no-such-flag"]) == 1
        assert cli_main(["frobnicate"]) == 1
        assert cli_main([]) == 1

    def test_unwritable_out_exit_2_no_manifest(self, tmp_path):
        # A regular file where the output directory should go (chmod-based
        # denial is useless under root).
        out = tmp_path / "occupied"
        out.write_text("in the way")
        code = cli_main(
            ["build", "--ids", "1", "--samples", "1", "--out", str(out)]
        )
        assert code == 2
        assert not (tmp_path / "occupied" / "manifest.json").exists()

    def test_tree_render_stats_flow(self, tmp_path):
        tree_file = tmp_path / "t.edges.txt"
        assert cli_main(["tree", "--seed", "7", "--family", "B",
                         "--out", str(tree_file)]) == 0
        assert tree_file.exists()
        render_dir = tmp_path / "views"
        assert cli_main(["render", str(tree_file), "--views", "5",
                         "--seed", "3", "--out", str(render_dir)]) == 0
        assert len(sorted(render_dir.glob("*.png"))) == 5

        report_path = tmp_path / "report.json"
        assert cli_main(["stats", str(render_dir), "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert set(report) == {"spec", "dirs", "overlap", "excluded_metrics"}
        assert report["dirs"][0]["n"] == 5

    def test_noise_subcommand(self, tmp_path):
        out = tmp_path / "z.pvnz"
        assert cli_main(["noise", "--dim", "16", "--count", "4", "--dist",
                         "0.5", "--seed", "1", "--out", str(out)]) == 0
        samples = read_noise_file(out)
        assert samples.shape == (4, 16)

    def test_config_file_with_flag_override(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text(
            'seed = 5\nn_identities = 9\nsamples_per_identity = 1\noutput_dir = "x"\n'
        )
        out = tmp_path / "d"
        code = cli_main(
            ["build", "--config", str(cfg_path), "--ids", "1", "--out", str(out)]
        )
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 5
        assert manifest["config"]["n_identities"] == 1  # flag beat the file

    def test_bad_config_file_exit_2(self, tmp_path):
        cfg_path = tmp_path / "c.toml"
        cfg_path.write_text("nonsense_key = true\n")
        assert cli_main(["build", "--config", str(cfg_path)]) == 2
