"""Shared fixtures: small prebuilt trees and a session-scoped mini dataset."""

import pytest

from veintree.config import GenerationConfig
from veintree.model import DomainBox, RadiusPolicy, VascularTree
from veintree.pipeline import build_dataset


@pytest.fixture
def box():
    return DomainBox()


@pytest.fixture
def policy():
    return RadiusPolicy(r0=0.4, ratio_e=0.1)


def make_y_tree(r_root=0.6, r_child=0.5):
    """root -> m, m -> a, m -> b (ids: nodes 0..3, segments 0..2)."""
    tree = VascularTree()
    root = tree.add_node((10.0, 40.0, 5.0), root=True)
    m = tree.add_node((10.0, 40.0, 15.0))
    a = tree.add_node((5.0, 40.0, 25.0))
    b = tree.add_node((15.0, 40.0, 25.0))
    tree.add_segment(root, m, r_root)
    tree.add_segment(m, a, r_child)
    tree.add_segment(m, b, r_child)
    return tree


def make_chain(points, radius=0.5):
    tree = VascularTree()
    ids = [tree.add_node(points[0], root=True)]
    for p in points[1:]:
        ids.append(tree.add_node(p))
    for a, b in zip(ids, ids[1:]):
        tree.add_segment(a, b, radius)
    return tree


@pytest.fixture
def y_tree():
    return make_y_tree()


MINI_SEED = 20240812
MINI_IDS = 50
MINI_SAMPLES = 7


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One visible PASS/FAIL line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" in nodeid and "::test_c" in nodeid:
                name = nodeid.split("::")[-1]
                lines[name] = "PASS" if outcome == "passed" else "FAIL"
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{lines[name]}  {name}")


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory):
    """50 identities x 7 samples with default knobs; reused by slow tests."""
    out = tmp_path_factory.mktemp("mini") / "dataset"
    config = GenerationConfig(
        seed=MINI_SEED,
        n_identities=MINI_IDS,
        samples_per_identity=MINI_SAMPLES,
        output_dir=str(out),
    )
    manifest = build_dataset(config)
    assert not manifest.aborted_identities
    return out, manifest
