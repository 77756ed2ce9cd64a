"""Command-line interface.

Subcommands: build (full dataset), tree (grow one debug tree), render
(render a tree file to patterns), noise (emit a constrained-noise file),
stats (GLCM report over image directories). Exit codes: 0 success, 1 usage
error, 2 runtime failure. Logs go to stderr; machine output goes to files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, GenerationConfig, apply_overrides, load_config
from .growth import grow
from .metrics import GlcmSpec, directory_stats
from .model import VeinTreeError, export_edges, import_edges
from .pipeline import build_dataset
from .pngio import save_png
from .render import ViewParams, project_and_rasterize
from .streams import substream
from .trajectory import tree_to_polylines
from .trunks import load_templates, sample_trunk
from .variation import NoiseSpec, sample_constrained_noise, write_noise_file

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="veintree", description=__doc__)
    parser.add_argument("--version", action="version", version=f"veintree {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="generate a full labeled dataset")
    build.add_argument("--config", type=Path, help="TOML config file")
    build.add_argument("--seed", type=int, help="global seed")
    build.add_argument("--ids", type=int, help="number of identities")
    build.add_argument("--samples", type=int, help="samples per identity")
    build.add_argument("--out", type=Path, help="output directory")
    build.add_argument("--workers", type=int, help="parallel identity workers")
    build.add_argument("--emit-noise", action="store_true", default=None,
                       help="also emit per-identity constrained-noise files")
    build.add_argument("--emit-trees", action="store_true", default=None,
                       help="also emit per-identity debug tree edge lists")

    tree = sub.add_parser("tree", help="grow one tree and export its edge list")
    tree.add_argument("--config", type=Path)
    tree.add_argument("--seed", type=int, default=0)
    tree.add_argument("--id", dest="identity", type=int, default=0,
                      help="identity id used for stream derivation")
    tree.add_argument("--family", choices=["A", "B", "C", "D"],
                      help="trunk family (default: first bundled template)")
    tree.add_argument("--out", type=Path, required=True, help="edge-list output file")

    render = sub.add_parser("render", help="render a tree edge-list file to patterns")
    render.add_argument("tree_file", type=Path)
    render.add_argument("--config", type=Path)
    render.add_argument("--seed", type=int, default=0)
    render.add_argument("--views", type=int, default=7)
    render.add_argument("--out", type=Path, required=True, help="output directory")

    noise = sub.add_parser("noise", help="emit a constrained-noise file")
    noise.add_argument("--dim", type=int, default=512)
    noise.add_argument("--count", type=int, default=7)
    noise.add_argument("--dist", type=float, default=0.5)
    noise.add_argument("--seed", type=int, default=0)
    noise.add_argument("--out", type=Path, required=True)

    stats = sub.add_parser("stats", help="GLCM feature report for a directory")
    stats.add_argument("directory", type=Path)
    stats.add_argument("--ref", type=Path,
                       help="reference directory (default: compare with itself)")
    stats.add_argument("--levels", type=int, default=16)
    stats.add_argument("--out", type=Path, required=True, help="JSON report file")
    return parser


def _load_base_config(path: Path | None) -> GenerationConfig:
    return load_config(path) if path else GenerationConfig()


def _cmd_build(args) -> int:
    config = apply_overrides(
        _load_base_config(args.config),
        seed=args.seed,
        n_identities=args.ids,
        samples_per_identity=args.samples,
        output_dir=str(args.out) if args.out else None,
        workers=args.workers,
        emit_noise=args.emit_noise,
        emit_debug_trees=args.emit_trees,
    )
    start = time.perf_counter()
    manifest = build_dataset(config)
    log.info(
        "built %d images for %d identities in %.1f s -> %s",
        len(manifest.records),
        config.n_identities - len(manifest.aborted_identities),
        time.perf_counter() - start,
        config.output_dir,
    )
    return EXIT_OK


def _grow_one_tree(config: GenerationConfig, seed: int, identity: int,
                   family: str | None):
    templates = load_templates()
    if family:
        templates = [t for t in templates if t.family == family]
        if not templates:
            raise VeinTreeError(f"no template for family {family}")
    trunk = sample_trunk(
        templates[0], config.box, config.radius, substream(seed, identity, "trunk")
    )
    return grow(
        trunk, config.growth, config.radius,
        substream(seed, identity, "growth"), config.box,
    )


def _cmd_tree(args) -> int:
    config = _load_base_config(args.config)
    tree = _grow_one_tree(config, args.seed, args.identity, args.family)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(export_edges(tree))
    log.info("wrote %d segments to %s", len(tree.segments), args.out)
    return EXIT_OK


def _cmd_render(args) -> int:
    config = _load_base_config(args.config)
    tree = import_edges(args.tree_file.read_text())
    polys = tree_to_polylines(
        tree, config.trajectory, substream(args.seed, "trajectory"), config.box
    )
    args.out.mkdir(parents=True, exist_ok=True)
    th_lo, th_hi = config.view.theta_range
    w_lo, w_hi = config.view.w_random_range
    for v in range(args.views):
        view_rng = substream(args.seed, "view", v)
        view = ViewParams(
            theta_z=th_lo + (th_hi - th_lo) * view_rng.random(),
            w_random=w_lo + (w_hi - w_lo) * view_rng.random(),
        )
        image = project_and_rasterize(polys, view, config.box, config.img_size)
        save_png(args.out / f"view_{v:02d}.png", image)
    log.info("rendered %d views to %s", args.views, args.out)
    return EXIT_OK


def _cmd_noise(args) -> int:
    spec = NoiseSpec(dim=args.dim, n_samples=args.count, l2_dist=args.dist)
    noise = sample_constrained_noise(spec, substream(args.seed, "noise"))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_noise_file(args.out, noise, spec)
    log.info("wrote %d noise vectors to %s", args.count, args.out)
    return EXIT_OK


def _cmd_stats(args) -> int:
    ref = args.ref if args.ref else args.directory
    report = directory_stats(args.directory, ref, GlcmSpec(levels=args.levels))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(report, indent=2) + "\n")
    log.info("wrote GLCM report to %s", args.out)
    return EXIT_OK


_COMMANDS = {
    "build": _cmd_build,
    "tree": _cmd_tree,
    "render": _cmd_render,
    "noise": _cmd_noise,
    "stats": _cmd_stats,
}


def cli_main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (VeinTreeError, ConfigError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
