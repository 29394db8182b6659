"""Command-line front end.

Subcommands: protodrop (dump the canonical droplet texture), preview
(single-image rain), augment (batch dataset augmentation), replay
(re-render a manifest), metrics (compare dataset trees).

Exit codes: 0 success, 1 runtime failure, 2 usage error. Every run prints
the effective seed and config hash unless --quiet is given, so there is no
silent nondeterminism.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from ._kernels import backend_name
from ._version import __version__
from .config import build_configs, config_hash, parse_config_file, parse_overrides
from .dropfield import DropField
from .errors import ParameterError, RainlensError
from .images import load_image, save_image, save_mask
from .pipeline import (DatasetLayout, augment_dataset, compare_datasets,
                       load_manifest, replay, write_metrics_csv,
                       write_metrics_json)
from .protodrop import generate_protodrop, load_texture, save_texture
from .render import apply_rain, composite, droplet_mask


def _default_workers():
    env = os.environ.get("RAINLENS_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError(f"RAINLENS_THREADS must be an integer, got {env!r}")
    return 1


def _add_config_args(p):
    p.add_argument("--config", type=Path, default=None,
                   help="key = value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (overrides config file)")
    p.add_argument("--quiet", action="store_true",
                   help="do not print the effective seed and config hash")


def _resolve_configs(args):
    file_values = parse_config_file(args.config) if args.config else None
    overrides = parse_overrides(args.overrides)
    field, proto, render = build_configs(file_values, overrides, seed=args.seed)
    digest = config_hash(field, proto, render)
    if not args.quiet:
        print(f"seed: {field.seed}  config-hash: {digest}")
    return field, proto, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rainlens",
        description="Synthesize adherent raindrops on images and evaluate "
                    "image degradation and restoration quality.")
    parser.add_argument("--version", action="version",
                        version=f"rainlens {__version__} ({backend_name()} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("protodrop",
                       help="generate the canonical droplet texture")
    p.add_argument("--out", type=Path, required=True,
                   help="output texture file (16-bit RGBA PNG + .json sidecar)")
    p.add_argument("--radius", type=float, default=64.0,
                   help="footprint radius in pixels (default 64)")
    p.add_argument("--cap-ratio", type=float, default=0.6,
                   help="apex height / footprint radius, in (0, 1] (default 0.6)")
    p.add_argument("--gain", type=float, default=600.0,
                   help="refraction offset gain, px per unit thickness (default 600)")
    p.add_argument("--resolution", type=int, default=0,
                   help="texture side length (default 2 * radius + 1)")
    p.add_argument("--viz", type=Path, default=None,
                   help="also write an 8-bit channel visualization grid")

    p = sub.add_parser("preview", help="add rain to a single image")
    p.add_argument("--input", "-i", type=Path, required=True)
    p.add_argument("--output", "-o", type=Path, required=True)
    p.add_argument("--mask", type=Path, default=None,
                   help="also write the droplet mask PNG")
    _add_config_args(p)

    p = sub.add_parser("augment", help="augment a dataset tree")
    p.add_argument("--root", type=Path, required=True, help="input dataset root")
    p.add_argument("--images", default="*.png",
                   help="image glob relative to root (default '*.png')")
    p.add_argument("--labels", default=None,
                   help="optional label glob relative to root; labels pair by stem")
    p.add_argument("--out", type=Path, required=True, help="output root")
    p.add_argument("--sequence", action="store_true",
                   help="frames are an ordered sequence sharing one droplet field")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers (default $RAINLENS_THREADS or 1)")
    p.add_argument("--keep-going", action="store_true",
                   help="exit 0 even if some files failed (errors are recorded)")
    _add_config_args(p)

    p = sub.add_parser("replay", help="re-render a manifest byte-identically")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--input-root", type=Path, default=None,
                   help="override the input root recorded in the manifest")

    p = sub.add_parser("metrics", help="compare two dataset trees by stem")
    p.add_argument("--dir-a", type=Path, required=True, help="reference tree")
    p.add_argument("--dir-b", type=Path, required=True, help="comparison tree")
    p.add_argument("--pred-masks", type=Path, default=None,
                   help="predicted binary masks (adds Prec/Rec/F1/IOU)")
    p.add_argument("--gt-masks", type=Path, default=None,
                   help="ground-truth binary masks")
    p.add_argument("--pred-labels", type=Path, default=None,
                   help="predicted label maps (adds mIOU; needs --classes)")
    p.add_argument("--gt-labels", type=Path, default=None)
    p.add_argument("--classes", type=int, default=None, help="label class count")
    p.add_argument("--ignore-label", type=int, default=None)
    p.add_argument("--csv", type=Path, default=None, help="write the table as CSV")
    p.add_argument("--json", type=Path, default=None, help="write the table as JSON")
    return parser


def _cmd_protodrop(args):
    tex = generate_protodrop(radius_px=args.radius, cap_ratio=args.cap_ratio,
                             refraction_gain=args.gain,
                             resolution=args.resolution or None)
    save_texture(tex, args.out)
    print(f"texture: {args.out} ({tex.width}x{tex.height}), "
          f"sidecar: {args.out}.json")
    if args.viz is not None:
        save_image(args.viz, channel_panels(load_texture(args.out)))
        print(f"visualization: {args.viz}")
    return 0


def channel_panels(tex):
    """2x2 grid of the texture channels scaled to [0, 1] for inspection.

    Offsets map midpoint-as-zero against the texture's own maximum, exactly
    inverse to the 16-bit file encoding, so a loaded texture reproduces the
    visualization bit for bit.
    """
    off_scale = float(max(np.abs(tex.r_chan).max(), np.abs(tex.g_chan).max()))
    if off_scale == 0.0:
        off_scale = 1.0
    r = tex.r_chan / off_scale * 0.5 + 0.5
    g = tex.g_chan / off_scale * 0.5 + 0.5
    top = np.concatenate([r, g], axis=1)
    bottom = np.concatenate([tex.b_chan, tex.alpha], axis=1)
    return np.concatenate([top, bottom], axis=0)


def _cmd_preview(args):
    field_cfg, proto_params, render_params = _resolve_configs(args)
    img = load_image(args.input)
    field = DropField(field_cfg, (img.shape[1], img.shape[0]))
    field.spawn()
    comp = composite(field, proto_params.make_texture(),
                     (img.shape[1], img.shape[0]),
                     rim_darkening=render_params.rim_darkening,
                     rim_width=render_params.rim_width,
                     rim_strength=render_params.rim_strength)
    save_image(args.output, apply_rain(img, comp, render_params.defocus_sigma))
    if args.mask is not None:
        save_mask(args.mask, droplet_mask(comp))
    print(f"preview: {args.output} ({len(field)} droplets)")
    return 0


def _cmd_augment(args):
    field_cfg, proto_params, render_params = _resolve_configs(args)
    layout = DatasetLayout(root=args.root, image_glob=args.images,
                           label_glob=args.labels, sequence=args.sequence)
    workers = args.workers if args.workers is not None else _default_workers()
    manifest = augment_dataset(layout, field_cfg, proto_params, args.out,
                               render_params=render_params, workers=workers)
    n_ok = len(manifest["frames"])
    n_err = len(manifest["errors"])
    print(f"augmented {n_ok} images, {n_err} errors, "
          f"manifest: {Path(args.out) / 'manifest.json'}")
    for err in manifest["errors"]:
        print(f"error: {err['input']}: {err['error']}", file=sys.stderr)
    if n_err and not args.keep_going:
        return 1
    return 0


def _cmd_replay(args):
    manifest = load_manifest(args.manifest)
    print(f"seed: {manifest['field_config']['seed']}  "
          f"config-hash: {manifest['config_hash']}")
    report = replay(manifest, args.out, input_root=args.input_root)
    print(f"replayed {report['frames']} frames, "
          f"{len(report['mismatches'])} checksum mismatches")
    for mm in report["mismatches"]:
        print(f"mismatch: {mm['file']}", file=sys.stderr)
    return 1 if report["mismatches"] else 0


def _cmd_metrics(args):
    if (args.pred_masks is None) != (args.gt_masks is None):
        raise ParameterError("--pred-masks and --gt-masks must be given together")
    if (args.pred_labels is None) != (args.gt_labels is None):
        raise ParameterError("--pred-labels and --gt-labels must be given together")
    if args.pred_labels is not None and not args.classes:
        raise ParameterError("--pred-labels requires --classes")
    report = compare_datasets(
        args.dir_a, args.dir_b,
        pred_mask_dir=args.pred_masks, gt_mask_dir=args.gt_masks,
        pred_label_dir=args.pred_labels, gt_label_dir=args.gt_labels,
        n_classes=args.classes, ignore_label=args.ignore_label)
    agg = report["aggregate"]
    if report["pairs"]:
        print(f"pairs: {agg['pairs']}  mean PSNR: {agg['psnr']:.2f} dB  "
              f"mean SSIM: {agg['ssim']:.4f}")
    else:
        print("no paired files")
    if args.csv:
        write_metrics_csv(report, args.csv)
    if args.json:
        write_metrics_json(report, args.json)
    unpaired = report["unpaired"]["a"] + report["unpaired"]["b"]
    if unpaired:
        for stem in unpaired:
            print(f"unpaired: {stem}", file=sys.stderr)
        return 1
    return 0


_COMMANDS = {
    "protodrop": _cmd_protodrop,
    "preview": _cmd_preview,
    "augment": _cmd_augment,
    "replay": _cmd_replay,
    "metrics": _cmd_metrics,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"rainlens {args.command}: {exc}", file=sys.stderr)
        return 2
    except RainlensError as exc:
        print(f"rainlens {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"rainlens {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
