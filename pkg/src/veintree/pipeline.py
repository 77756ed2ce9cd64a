"""End-to-end dataset generation: trees, views, files, manifest.

One identity is one 3D vascular tree. Its samples share that tree and vary
only in view rotation, depth-shading jitter, creases, and posture
augmentation. All randomness flows through streams keyed by
(seed, identity id, stage, sample index), so identities can be built in any
order or in parallel with byte-identical results.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import GenerationConfig
from .growth import SaturatedDomainError, grow
from .model import export_edges
from .pngio import save_png
from .render import ViewParams, blend_creases, generate_creases, project_and_rasterize
from .streams import stream_token, substream
from .trajectory import tree_to_polylines
from .trunks import TrunkTemplate, load_templates, sample_trunk
from .variation import augment, sample_constrained_noise, write_noise_file

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ManifestRecord:
    identity_id: int
    trunk_family: str
    sample_index: int
    theta_z: float
    w_random: float
    augment_seed: int
    path: str


@dataclass
class DatasetManifest:
    config: dict
    records: list[ManifestRecord]
    version: str
    aborted_identities: list[int]

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "records": [dataclasses.asdict(r) for r in self.records],
            "version": self.version,
        }
        return json.dumps(payload, indent=2) + "\n"


@dataclass
class SampleResult:
    image: np.ndarray
    theta_z: float
    w_random: float
    augment_seed: int


@dataclass
class IdentityResult:
    identity_id: int
    family: str
    samples: list[SampleResult]
    tree_edges: str
    noise: object | None


def _pick_family(config: GenerationConfig, rng: np.random.Generator) -> str:
    weights = np.asarray(config.family_distribution, dtype=np.float64)
    cdf = np.cumsum(weights / weights.sum())
    return "ABCD"[int(np.searchsorted(cdf, rng.random(), side="right"))]


def generate_identity(
    identity_id: int,
    config: GenerationConfig,
    templates: list[TrunkTemplate] | None = None,
) -> IdentityResult:
    """Grow one identity's tree and render all of its samples.

    The trunk family and tree are sampled once per identity; every sample
    draws its own view angle, gray jitter, creases, and augmentation from
    sample-indexed streams.
    """
    templates = templates if templates is not None else load_templates()
    seed = config.seed

    family = _pick_family(config, substream(seed, identity_id, "family"))
    candidates = [t for t in templates if t.family == family]
    if not candidates:
        raise SaturatedDomainError(f"no template available for family {family}")
    trunk_rng = substream(seed, identity_id, "trunk")
    template = candidates[int(trunk_rng.integers(0, len(candidates)))]
    trunk = sample_trunk(template, config.box, config.radius, trunk_rng)
    tree = grow(
        trunk, config.growth, config.radius,
        substream(seed, identity_id, "growth"), config.box,
    )
    polys = tree_to_polylines(
        tree, config.trajectory, substream(seed, identity_id, "trajectory"), config.box
    )

    samples = []
    th_lo, th_hi = config.view.theta_range
    w_lo, w_hi = config.view.w_random_range
    for s in range(config.samples_per_identity):
        view_rng = substream(seed, identity_id, "view", s)
        theta = th_lo + (th_hi - th_lo) * view_rng.random()
        w_random = w_lo + (w_hi - w_lo) * view_rng.random()
        pattern = project_and_rasterize(
            polys, ViewParams(theta, w_random), config.box, config.img_size
        )
        creases = generate_creases(
            config.creases, substream(seed, identity_id, "crease", s), config.img_size
        )
        pattern = blend_creases(pattern, creases)
        token = stream_token(seed, identity_id, "augment", s)
        image = augment(pattern, config.augment, np.random.default_rng(token))
        samples.append(
            SampleResult(image=image, theta_z=theta, w_random=w_random, augment_seed=token)
        )

    noise = None
    if config.emit_noise:
        noise = sample_constrained_noise(
            config.noise, substream(seed, identity_id, "noise")
        )
    return IdentityResult(
        identity_id=identity_id,
        family=family,
        samples=samples,
        tree_edges=export_edges(tree),
        noise=noise,
    )


def _write_identity(result: IdentityResult, config: GenerationConfig,
                    out: Path) -> list[ManifestRecord]:
    ident_dir = out / f"{result.identity_id:05d}"
    ident_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for s, sample in enumerate(result.samples):
        rel = f"{result.identity_id:05d}/{s:02d}.png"
        save_png(out / rel, sample.image)
        records.append(
            ManifestRecord(
                identity_id=result.identity_id,
                trunk_family=result.family,
                sample_index=s,
                theta_z=sample.theta_z,
                w_random=sample.w_random,
                augment_seed=sample.augment_seed,
                path=rel,
            )
        )
    if config.emit_debug_trees:
        trees_dir = out / "trees"
        trees_dir.mkdir(exist_ok=True)
        (trees_dir / f"{result.identity_id:05d}.edges.txt").write_text(result.tree_edges)
    if result.noise is not None:
        noise_dir = out / "noise"
        noise_dir.mkdir(exist_ok=True)
        write_noise_file(
            noise_dir / f"{result.identity_id:05d}.pvnz", result.noise, config.noise
        )
    return records


def _build_one(identity_id: int, config: GenerationConfig,
               out: str) -> tuple[int, list[ManifestRecord] | None]:
    try:
        result = generate_identity(identity_id, config)
    except SaturatedDomainError as exc:
        log.error("identity %d aborted: %s", identity_id, exc)
        return identity_id, None
    return identity_id, _write_identity(result, config, Path(out))


def build_dataset(config: GenerationConfig) -> DatasetManifest:
    """Generate every identity, write images and manifest, return the manifest.

    Identities whose growth saturates the domain are skipped (their ids are
    reported, not retried). The manifest is written last, so a failed build
    leaves no manifest behind.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    records: list[ManifestRecord] = []
    aborted: list[int] = []

    ids = list(range(config.n_identities))
    if config.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
            results = pool.map(
                _build_one, ids, [config] * len(ids), [str(out)] * len(ids),
                chunksize=8,
            )
            for identity_id, recs in results:
                if recs is None:
                    aborted.append(identity_id)
                else:
                    records.extend(recs)
    else:
        for identity_id in ids:
            _, recs = _build_one(identity_id, config, str(out))
            if recs is None:
                aborted.append(identity_id)
            else:
                records.extend(recs)
            if (identity_id + 1) % 100 == 0:
                log.info("built %d/%d identities", identity_id + 1, config.n_identities)

    records.sort(key=lambda r: (r.identity_id, r.sample_index))
    manifest = DatasetManifest(
        config=config.as_dict(),
        records=records,
        version=__version__,
        aborted_identities=sorted(aborted),
    )
    (out / "manifest.json").write_text(manifest.to_json())
    if aborted:
        log.warning("aborted identities (domain saturation): %s", aborted)
    return manifest
