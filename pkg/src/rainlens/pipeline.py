"""Batch dataset augmentation with a replayable manifest.

``augment_dataset`` walks an image tree, renders a rainy counterpart and a
droplet mask for every image, copies labels through untouched, and writes a
manifest that records the full effective configuration and the droplet
state of every frame. ``replay`` re-renders a manifest byte-identically
from those stored states. ``compare_datasets`` pairs two trees by stem and
reports restoration-quality metrics.

Determinism contract: (inputs, config, seed) fully determine every output
byte. Non-sequence runs derive one seed per image from the master seed and
the image index, so results do not depend on scheduling or worker count.
"""

import hashlib
import json
import shutil
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._version import __version__
from .config import ProtoParams, RenderParams, config_hash
from .dropfield import DropField, FieldConfig
from .errors import FormatError, ManifestError, ManifestVersionError, PairingError
from .images import load_image, save_image, save_mask, load_mask
from .metrics import binary_seg_stats, multiclass_miou, psnr, ssim
from .render import apply_rain, composite, droplet_mask

MANIFEST_FORMAT = "rainlens-manifest"
MANIFEST_VERSION = 1


@dataclass
class DatasetLayout:
    """Where a dataset lives and how its frames relate."""

    root: Path
    image_glob: str = "*.png"
    label_glob: Optional[str] = None
    sequence: bool = False   # ordered frames share one evolving droplet field

    def __post_init__(self):
        self.root = Path(self.root)

    def discover(self):
        """List (image, label-or-None) pairs, sorted by relative path.

        Labels pair 1:1 with images by filename stem; any mismatch aborts
        before the pipeline writes anything.
        """
        images = sorted(p for p in self.root.glob(self.image_glob) if p.is_file())
        if self.label_glob is None:
            return [(img, None) for img in images]
        labels = sorted(p for p in self.root.glob(self.label_glob) if p.is_file())
        by_stem = {}
        for lab in labels:
            if lab.stem in by_stem:
                raise PairingError(f"duplicate label stem {lab.stem!r}: {lab}")
            by_stem[lab.stem] = lab
        missing = [str(img) for img in images if img.stem not in by_stem]
        extra = set(by_stem) - {img.stem for img in images}
        if missing or extra:
            raise PairingError(
                f"images and labels do not pair 1:1: "
                f"{len(missing)} images without labels {missing[:5]}, "
                f"{len(extra)} labels without images {sorted(extra)[:5]}")
        return [(img, by_stem[img.stem]) for img in images]


def derive_seed(master_seed, index):
    """Stable per-image seed from the master seed and the image index."""
    digest = hashlib.sha256(f"rainlens:{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# Proto textures are deterministic in their parameters; cache per process
# so parallel workers generate them once.
_PROTO_CACHE = {}


def _proto_for(params_dict):
    key = json.dumps(params_dict, sort_keys=True)
    if key not in _PROTO_CACHE:
        _PROTO_CACHE[key] = ProtoParams.from_dict(params_dict).make_texture()
    return _PROTO_CACHE[key]


def _render_frame(img, field, proto, render_params):
    comp = composite(field, proto, (img.shape[1], img.shape[0]),
                     rim_darkening=render_params.rim_darkening,
                     rim_width=render_params.rim_width,
                     rim_strength=render_params.rim_strength)
    rainy = apply_rain(img, comp, defocus_sigma=render_params.defocus_sigma)
    return rainy, droplet_mask(comp)


def _out_paths(rel):
    rel_png = rel.with_suffix(".png")
    return Path("rainy") / rel_png, Path("mask") / rel_png


def _augment_one(task):
    """Augment a single image; runs in a worker process for parallel runs."""
    (index, img_path, label_path, rel, label_rel_src, out_root,
     field_dict, proto_dict, render_dict) = task
    out_root = Path(out_root)
    rel = Path(rel)
    out_rel, mask_rel = _out_paths(rel)
    try:
        img = load_image(img_path)
    except FormatError as exc:
        return {"index": index, "input": str(rel), "error": str(exc)}

    cfg = FieldConfig.from_dict(field_dict)
    field = DropField(cfg, (img.shape[1], img.shape[0]))
    field.spawn()
    rainy, mask = _render_frame(img, field, _proto_for(proto_dict),
                                RenderParams.from_dict(render_dict))

    (out_root / out_rel).parent.mkdir(parents=True, exist_ok=True)
    (out_root / mask_rel).parent.mkdir(parents=True, exist_ok=True)
    save_image(out_root / out_rel, rainy)
    save_mask(out_root / mask_rel, mask)
    checksums = {"output": _sha256_file(out_root / out_rel),
                 "mask": _sha256_file(out_root / mask_rel)}

    record = {
        "index": index,
        "input": str(rel),
        "output": str(out_rel),
        "mask": str(mask_rel),
        "label": None,
        "label_source": None,
    }
    if label_path is not None:
        label_rel = Path("labels") / label_rel_src
        (out_root / label_rel).parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(label_path, out_root / label_rel)
        record["label"] = str(label_rel)
        record["label_source"] = str(label_rel_src)
        checksums["label"] = _sha256_file(out_root / label_rel)

    record.update({
        "seed": cfg.seed,
        "frame": field.frame,
        "droplets": field.to_record()["droplets"],
        "checksums": checksums,
    })
    return record


def augment_dataset(layout, field_cfg, proto_params, out_root,
                    render_params=None, workers=1):
    """Render rainy counterparts and masks for a whole image tree.

    Returns the manifest dict, which is also written to
    ``out_root/manifest.json`` after all frames are done. Unreadable inputs
    are recorded under ``errors`` and do not affect other frames.
    """
    render_params = render_params or RenderParams()
    proto_params = proto_params or ProtoParams()
    pairs = layout.discover()
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)

    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "toolkit_version": __version__,
        "input_root": str(layout.root),
        "image_glob": layout.image_glob,
        "label_glob": layout.label_glob,
        "sequence": layout.sequence,
        "field_config": field_cfg.to_dict(),
        "proto_params": proto_params.to_dict(),
        "render_params": render_params.to_dict(),
        "config_hash": config_hash(field_cfg, proto_params, render_params),
        "frames": [],
        "errors": [],
    }

    if layout.sequence:
        _augment_sequence(manifest, pairs, layout, field_cfg, proto_params,
                          render_params, out_root)
    else:
        tasks = [
            (i, str(img), str(lab) if lab else None,
             str(img.relative_to(layout.root)),
             str(lab.relative_to(layout.root)) if lab else None,
             str(out_root),
             field_cfg.with_seed(derive_seed(field_cfg.seed, i)).to_dict(),
             proto_params.to_dict(), render_params.to_dict())
            for i, (img, lab) in enumerate(pairs)
        ]
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_augment_one, tasks))
        else:
            results = [_augment_one(t) for t in tasks]
        for res in results:
            (manifest["errors"] if "error" in res else manifest["frames"]).append(res)

    save_manifest(manifest, out_root / "manifest.json")
    return manifest


def _augment_sequence(manifest, pairs, layout, field_cfg, proto_params,
                      render_params, out_root):
    """Sequence mode: consecutive frames share one evolving droplet field."""
    proto = _proto_for(proto_params.to_dict())
    field = None
    for i, (img_path, label_path) in enumerate(pairs):
        rel = img_path.relative_to(layout.root)
        out_rel, mask_rel = _out_paths(rel)
        try:
            img = load_image(img_path)
        except FormatError as exc:
            manifest["errors"].append(
                {"index": i, "input": str(rel), "error": str(exc)})
            continue
        if field is None:
            field = DropField(field_cfg, (img.shape[1], img.shape[0]))
            field.spawn()
        rainy, mask = _render_frame(img, field, proto, render_params)

        (out_root / out_rel).parent.mkdir(parents=True, exist_ok=True)
        (out_root / mask_rel).parent.mkdir(parents=True, exist_ok=True)
        save_image(out_root / out_rel, rainy)
        save_mask(out_root / mask_rel, mask)
        record = {
            "index": i,
            "input": str(rel),
            "output": str(out_rel),
            "mask": str(mask_rel),
            "label": None,
            "label_source": None,
            "seed": field_cfg.seed,
            "frame": field.frame,
            "droplets": field.to_record()["droplets"],
            "checksums": {"output": _sha256_file(out_root / out_rel),
                          "mask": _sha256_file(out_root / mask_rel)},
        }
        if label_path is not None:
            label_rel_src = label_path.relative_to(layout.root)
            label_rel = Path("labels") / label_rel_src
            (out_root / label_rel).parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(label_path, out_root / label_rel)
            record["label"] = str(label_rel)
            record["label_source"] = str(label_rel_src)
            record["checksums"]["label"] = _sha256_file(out_root / label_rel)
        manifest["frames"].append(record)
        field.step()


def save_manifest(manifest, path):
    with open(path, "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
        f.write("\n")


def load_manifest(path):
    try:
        with open(path) as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{path} is not a {MANIFEST_FORMAT} file")
    if manifest.get("version") != MANIFEST_VERSION:
        raise ManifestVersionError(
            f"manifest version {manifest.get('version')} is not supported "
            f"by this toolkit (expected {MANIFEST_VERSION})")
    return manifest


def replay(manifest, out_root, input_root=None):
    """Re-render every frame of a manifest from its stored droplet states.

    Outputs are byte-identical to the original run because rendering is
    deterministic in the recorded droplet states; the stored RNG seeds are
    not re-consumed. Returns a report with per-frame checksum verification.
    """
    if not isinstance(manifest, dict):
        manifest = load_manifest(manifest)
    input_root = Path(input_root if input_root is not None else manifest["input_root"])
    out_root = Path(out_root)

    stored_hash = manifest.get("config_hash")
    field_cfg = FieldConfig.from_dict(manifest["field_config"])
    proto_params = ProtoParams.from_dict(manifest["proto_params"])
    render_params = RenderParams.from_dict(manifest["render_params"])
    actual_hash = config_hash(field_cfg, proto_params, render_params)
    if stored_hash != actual_hash:
        warnings.warn(
            f"manifest config hash mismatch (stored {stored_hash}, "
            f"recomputed {actual_hash}); the manifest was edited and replay "
            f"may not reproduce the original run")

    missing = [rec["input"] for rec in manifest["frames"]
               if not (input_root / rec["input"]).exists()]
    if missing:
        raise ManifestError(f"replay inputs missing under {input_root}: {missing[:10]}")

    out_root.mkdir(parents=True, exist_ok=True)
    proto = _proto_for(manifest["proto_params"])
    report = {"frames": 0, "mismatches": []}
    for rec in manifest["frames"]:
        img = load_image(input_root / rec["input"])
        cfg = field_cfg.with_seed(rec["seed"])
        field = DropField.from_record(
            cfg, (img.shape[1], img.shape[0]),
            {"frame": rec["frame"], "droplets": rec["droplets"]})
        rainy, mask = _render_frame(img, field, proto, render_params)

        out_path = out_root / rec["output"]
        mask_path = out_root / rec["mask"]
        out_path.parent.mkdir(parents=True, exist_ok=True)
        mask_path.parent.mkdir(parents=True, exist_ok=True)
        save_image(out_path, rainy)
        save_mask(mask_path, mask)
        if rec.get("label_source"):
            label_path = out_root / rec["label"]
            label_path.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(input_root / rec["label_source"], label_path)

        for key, path in (("output", out_path), ("mask", mask_path)):
            want = rec["checksums"].get(key)
            got = _sha256_file(path)
            if want is not None and want != got:
                report["mismatches"].append(
                    {"index": rec["index"], "file": str(path),
                     "expected": want, "actual": got})
        report["frames"] += 1
    return report


def _stem_map(directory, glob):
    files = {}
    for p in sorted(Path(directory).glob(glob)):
        if p.is_file():
            files.setdefault(p.stem, p)
    return files


def compare_datasets(dir_a, dir_b, pred_mask_dir=None, gt_mask_dir=None,
                     pred_label_dir=None, gt_label_dir=None,
                     n_classes=None, ignore_label=None, glob="*.png"):
    """Compare two image trees paired by filename stem.

    Produces per-pair and mean PSNR / SSIM. Optional mask directories add
    binary segmentation statistics; optional label directories (with
    n_classes) add multiclass mean IOU. Unpaired files are listed and
    excluded.
    """
    files_a = _stem_map(dir_a, glob)
    files_b = _stem_map(dir_b, glob)
    common = sorted(set(files_a) & set(files_b))
    unpaired = {"a": sorted(set(files_a) - set(files_b)),
                "b": sorted(set(files_b) - set(files_a))}

    masks_pred = _stem_map(pred_mask_dir, glob) if pred_mask_dir else None
    masks_gt = _stem_map(gt_mask_dir, glob) if gt_mask_dir else None
    labels_pred = _stem_map(pred_label_dir, glob) if pred_label_dir else None
    labels_gt = _stem_map(gt_label_dir, glob) if gt_label_dir else None

    rows = []
    seg_totals = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for stem in common:
        a = load_image(files_a[stem])
        b = load_image(files_b[stem])
        row = {"name": stem, "psnr": psnr(a, b), "ssim": ssim(a, b)}
        if masks_pred is not None and masks_gt is not None:
            if stem in masks_pred and stem in masks_gt:
                stats = binary_seg_stats(load_mask(masks_pred[stem]),
                                         load_mask(masks_gt[stem]))
                row.update({"prec": stats.precision, "rec": stats.recall,
                            "f1": stats.f1, "iou": stats.iou})
                for key in seg_totals:
                    seg_totals[key] += getattr(stats, key)
        if labels_pred is not None and labels_gt is not None and n_classes:
            if stem in labels_pred and stem in labels_gt:
                pred = _load_labels(labels_pred[stem])
                gt = _load_labels(labels_gt[stem])
                row["miou"] = multiclass_miou(pred, gt, n_classes, ignore_label)
        rows.append(row)

    aggregate = {"name": "mean", "pairs": len(rows)}
    if rows:
        aggregate["psnr"] = float(np.mean([r["psnr"] for r in rows]))
        aggregate["ssim"] = float(np.mean([r["ssim"] for r in rows]))
        if any("miou" in r for r in rows):
            aggregate["miou"] = float(np.mean([r["miou"] for r in rows if "miou" in r]))
    if masks_pred is not None and masks_gt is not None:
        tp, fp, fn = seg_totals["tp"], seg_totals["fp"], seg_totals["fn"]
        aggregate["prec"] = tp / (tp + fp) if tp + fp else 0.0
        aggregate["rec"] = tp / (tp + fn) if tp + fn else 0.0
        pr, rc = aggregate["prec"], aggregate["rec"]
        aggregate["f1"] = 2.0 * pr * rc / (pr + rc) if pr + rc else 0.0
        aggregate["iou"] = tp / (tp + fp + fn) if tp + fp + fn else 0.0
    return {"pairs": rows, "aggregate": aggregate, "unpaired": unpaired}


def _load_labels(path):
    from PIL import Image
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.int64)


TABLE_COLUMNS = ("name", "psnr", "ssim", "prec", "rec", "f1", "iou", "miou")


def _table_rows(report):
    rows = list(report["pairs"])
    rows.append(report["aggregate"])
    return rows


def write_metrics_csv(report, path):
    """Write the comparison as CSV with the standard metric columns."""
    import csv
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for row in _table_rows(report):
            writer.writerow([_csv_cell(row.get(col)) for col in TABLE_COLUMNS])


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "inf" if value == float("inf") else f"{value:.6f}"
    return value


def _json_safe(obj):
    if isinstance(obj, float):
        return "inf" if obj == float("inf") else obj
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_metrics_json(report, path):
    """Write the comparison as JSON (infinities encoded as the string "inf")."""
    with open(path, "w") as f:
        json.dump(_json_safe(report), f, indent=1, sort_keys=True)
        f.write("\n")
