"""Pipeline orchestration, configuration, and report emission.

Runs sample -> embed -> cluster -> select per subarea (or once for the
whole image in mask / mask-free modes) and writes the extracted textures
plus a deterministic JSON report. Wall-clock timings go to a separate
timings.json so the report bytes depend only on inputs, config and seed.
"""

import argparse
import json
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import regions as regions_mod
from .cluster import derive_seed, kmeans, largest_cluster
from .embedder import (
    AugmentationSpec,
    EMBED_DIM,
    EmbedderModel,
    TrainingConfig,
    embed_batch,
    train_autoencoder,
)
from .errors import ConfigError, RetexError, UnwritableOutput
from .evalkit import corpus_stats, ncc_score
from .raster import (
    MaskRaster,
    RasterImage,
    load_image,
    load_labels,
    load_mask,
    save_image,
)
from .sampler import SamplerConfig, sample_candidates
from .selector import select
from .texops import render_cluster_overlay, tile_texture

DEFAULT_K_SET = (3, 4, 5, 6)


@dataclass(frozen=True)
class PipelineConfig:
    image_path: str
    out_dir: str
    labels_path: str | None = None
    class_map: dict[int, str] | None = None
    background_class: str | None = None
    separator_classes: tuple[str, ...] = ()
    mask_path: str | None = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    embedder: str = "autoencoder"
    training: TrainingConfig = field(default_factory=TrainingConfig)
    augmentation: AugmentationSpec = field(default_factory=AugmentationSpec)
    k_set: tuple[int, ...] = DEFAULT_K_SET
    kmeans_max_iters: int = 300
    seed: int = 0
    overlay: bool = False
    tile_preview: tuple[int, int] | None = None
    eval_truth: str | None = None

    def __post_init__(self):
        if self.labels_path and self.mask_path:
            raise ConfigError("--labels and --mask are mutually exclusive")
        if self.labels_path and (self.class_map is None or not self.background_class):
            raise ConfigError("--labels requires --class-map and --background-class")
        if (self.class_map or self.background_class or self.separator_classes) \
                and not self.labels_path:
            raise ConfigError("class map options require --labels")
        if self.embedder not in ("autoencoder", "descriptor"):
            raise ConfigError(f"unknown embedder {self.embedder!r}")
        if not self.k_set or any(k < 2 for k in self.k_set):
            raise ConfigError("k_set must be nonempty integers >= 2")

    @property
    def mode(self) -> str:
        if self.labels_path:
            return "labels"
        if self.mask_path:
            return "mask"
        return "mask-free"


@dataclass
class _Region:
    region_id: int
    mask: MaskRaster
    pixel_count: int
    bounding_box: tuple[int, int, int, int]
    skipped: str | None = None


@dataclass
class _Outcome:
    region_id: int
    error: dict | None = None
    candidates: list = None
    model: object = None
    result: object = None
    dbi_per_k: list = None
    timings: dict = None


def _round_floats(obj):
    """Normalize a report tree: floats to 12 significant digits."""
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if not np.isfinite(x):
            return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
        return float(f"{x:.12g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_report(report: dict, path: str | Path) -> None:
    """Serialize the report as deterministic UTF-8 JSON."""
    text = json.dumps(_round_floats(report), indent=2, ensure_ascii=True)
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise UnwritableOutput(f"cannot write {path}: {exc}") from exc


def _select_k_detailed(vectors, k_set, seed, max_iters):
    """All per-k DBI values plus the winning model (min DBI, then min k)."""
    per_k = []
    best = None
    for k in sorted(k_set):
        model = kmeans(vectors, k, derive_seed(seed, k), max_iters=max_iters)
        per_k.append((k, model.dbi))
        if best is None or model.dbi < best.dbi:
            best = model
    return best, per_k


def _process_region(img: RasterImage, region: _Region, cfg: PipelineConfig) -> _Outcome:
    out = _Outcome(region_id=region.region_id)
    timings = {}
    stage = "sample"
    try:
        t0 = time.perf_counter()
        sampler_cfg = SamplerConfig(
            sample_count=cfg.sampler.sample_count,
            min_side=cfg.sampler.min_side,
            max_side=cfg.sampler.max_side,
            coverage_threshold=cfg.sampler.coverage_threshold,
            max_attempts=cfg.sampler.max_attempts,
            seed=derive_seed(cfg.seed, region.region_id, 1),
        )
        candidates = sample_candidates(img, region.mask, sampler_cfg,
                                       subarea_id=region.region_id)
        timings["sample"] = time.perf_counter() - t0

        stage = "embed"
        t0 = time.perf_counter()
        patches = [c.patch for c in candidates]
        if cfg.embedder == "autoencoder":
            model_e = train_autoencoder(
                candidates, cfg.augmentation, cfg.training,
                seed=derive_seed(cfg.seed, region.region_id, 2),
            )
        else:
            model_e = EmbedderModel(kind="descriptor",
                                    canonical_size=cfg.training.canonical_size,
                                    embed_dim=EMBED_DIM)
        embeddings = embed_batch(model_e, patches)
        timings["embed"] = time.perf_counter() - t0

        stage = "cluster"
        t0 = time.perf_counter()
        cmodel, per_k = _select_k_detailed(
            embeddings, cfg.k_set,
            derive_seed(cfg.seed, region.region_id, 3), cfg.kmeans_max_iters,
        )
        timings["cluster"] = time.perf_counter() - t0

        stage = "select"
        t0 = time.perf_counter()
        result = select(candidates, embeddings, cmodel)
        timings["select"] = time.perf_counter() - t0

        out.candidates = candidates
        out.model = cmodel
        out.result = result
        out.dbi_per_k = per_k
    except RetexError as exc:
        out.error = {"stage": stage, "type": type(exc).__name__,
                     "message": str(exc)}
    out.timings = timings
    return out


def _resolve_regions(img: RasterImage, cfg: PipelineConfig) -> list[_Region]:
    h, w = img.height, img.width
    if cfg.mode == "mask-free":
        mask = MaskRaster(np.ones((h, w), dtype=bool))
        return [_Region(0, mask, h * w, (0, 0, w, h))]
    if cfg.mode == "mask":
        mask = load_mask(cfg.mask_path)
        if (mask.width, mask.height) != (w, h):
            raise ConfigError(
                f"mask {mask.width}x{mask.height} does not match image {w}x{h}"
            )
        return [_Region(0, mask, mask.true_count(), (0, 0, w, h))]

    labels = load_labels(cfg.labels_path, cfg.class_map)
    if (labels.width, labels.height) != (w, h):
        raise ConfigError(
            f"labels {labels.width}x{labels.height} does not match image {w}x{h}"
        )
    background_id = labels.class_id(cfg.background_class)
    separator_ids = frozenset(labels.class_id(n) for n in cfg.separator_classes)
    subareas = regions_mod.find_subareas(labels, background_id, separator_ids)
    floor = regions_mod.min_extractable_pixels(cfg.sampler.min_side)
    out = []
    for sub in subareas:
        region = _Region(sub.id, regions_mod.subarea_mask(sub, w, h),
                         sub.pixel_count, sub.bounding_box)
        if sub.pixel_count < floor:
            region.skipped = (
                f"subarea has {sub.pixel_count} pixels, below the "
                f"{floor}-pixel sampling floor"
            )
        out.append(region)
    return out


def _config_echo(cfg: PipelineConfig) -> dict:
    return {
        "image": cfg.image_path,
        "mode": cfg.mode,
        "labels": cfg.labels_path,
        "class_map": (
            None if cfg.class_map is None
            else {str(k): v for k, v in sorted(cfg.class_map.items())}
        ),
        "background_class": cfg.background_class,
        "separator_classes": list(cfg.separator_classes),
        "mask": cfg.mask_path,
        "samples": cfg.sampler.sample_count,
        "min_side": cfg.sampler.min_side,
        "max_side": cfg.sampler.max_side,
        "coverage": cfg.sampler.coverage_threshold,
        "max_attempts": cfg.sampler.max_attempts,
        "seed": cfg.seed,
        "embedder": cfg.embedder,
        "epochs": cfg.training.epochs,
        "batch_size": cfg.training.batch_size,
        "learning_rate": cfg.training.learning_rate,
        "canonical_size": cfg.training.canonical_size,
        "augmentation": {
            "flip_prob": cfg.augmentation.flip_prob,
            "translate_max": cfg.augmentation.translate_max,
            "scale_range": list(cfg.augmentation.scale_range),
            "crop_jitter": cfg.augmentation.crop_jitter,
        },
        "k_set": sorted(cfg.k_set),
        "kmeans_max_iters": cfg.kmeans_max_iters,
        "out_dir": cfg.out_dir,
        "overlay": cfg.overlay,
        "tile_preview": list(cfg.tile_preview) if cfg.tile_preview else None,
        "eval_truth": cfg.eval_truth,
    }


def _member_entries(result) -> list[dict]:
    out = []
    for pos, idx in enumerate(result.member_indices.tolist()):
        out.append({
            "index": idx,
            "d": float(result.distances[pos]),
            "t": float(result.width_factors[pos]),
            "b": float(result.boundary_factors[pos]),
            "v": float(result.weights[pos]),
            "w": float(result.weighted_distances[pos]),
        })
    return out


def _chosen_entry(candidates, idx: int) -> dict:
    cand = candidates[idx]
    return {"index": idx, "center": list(cand.center), "side": cand.side}


def run_pipeline(cfg: PipelineConfig, workers: int = 1) -> int:
    """Execute the pipeline; returns the process exit code.

    Outputs per processed subarea: texture_plain_<id>.png,
    texture_weighted_<id>.png, optional overlay_<id>.png and
    tiled_<id>.png, plus report.json (deterministic) and timings.json.
    """
    out_dir = Path(cfg.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return 2

    try:
        img = load_image(cfg.image_path)
        truth = load_image(cfg.eval_truth) if cfg.eval_truth else None
        regions = _resolve_regions(img, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RetexError as exc:
        # Errors while reading labels/masks that have named pipeline
        # semantics (e.g. NoBackgroundPixels) get reported; pure input
        # problems (unreadable/unsupported files) are config errors.
        from .errors import NoBackgroundPixels, UnknownClass

        if isinstance(exc, (NoBackgroundPixels, UnknownClass)):
            report = {
                "config": _config_echo(cfg),
                "subareas": [],
                "corpus_stats": None,
                "error": {"stage": "regions", "type": type(exc).__name__,
                          "message": str(exc)},
            }
            write_report(report, out_dir / "report.json")
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2

    active = [r for r in regions if r.skipped is None]
    if workers > 1 and len(active) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda r: _process_region(img, r, cfg), active))
    else:
        outcomes = [_process_region(img, r, cfg) for r in active]
    by_id = {o.region_id: o for o in outcomes}

    entries = []
    results, cand_lists = [], []
    first_error = None
    timings_doc = {}
    for region in regions:
        entry = {
            "id": region.region_id,
            "pixel_count": region.pixel_count,
            "bounding_box": list(region.bounding_box),
        }
        if region.skipped is not None:
            entry["skipped"] = region.skipped
            entries.append(entry)
            continue
        outcome = by_id[region.region_id]
        timings_doc[str(region.region_id)] = outcome.timings
        if outcome.error is not None:
            entry["error"] = outcome.error
            if first_error is None:
                first_error = dict(outcome.error, subarea=region.region_id)
            entries.append(entry)
            continue

        cands = outcome.candidates
        result = outcome.result
        model = outcome.model
        rid = region.region_id
        plain_patch = cands[result.chosen_plain].patch
        weighted_patch = cands[result.chosen_weighted].patch
        save_image(weighted_patch, out_dir / f"texture_weighted_{rid}.png")
        save_image(plain_patch, out_dir / f"texture_plain_{rid}.png")
        if cfg.overlay:
            overlay = render_cluster_overlay(img, cands, model, result)
            save_image(overlay, out_dir / f"overlay_{rid}.png")
        if cfg.tile_preview:
            tw, th = cfg.tile_preview
            save_image(tile_texture(weighted_patch, tw, th),
                       out_dir / f"tiled_{rid}.png")

        entry.update({
            "candidate_count": len(cands),
            "k_set": [k for k, _ in outcome.dbi_per_k],
            "dbi_per_k": [dbi for _, dbi in outcome.dbi_per_k],
            "selected_k": model.k,
            "cluster_sizes": model.cluster_sizes().tolist(),
            "largest_cluster": int(largest_cluster(model)[0]),
            "members": _member_entries(result),
            "chosen": {
                "plain": _chosen_entry(cands, result.chosen_plain),
                "weighted": _chosen_entry(cands, result.chosen_weighted),
                "median": _chosen_entry(cands, result.chosen_median),
            },
        })
        if truth is not None:
            entry["ncc"] = {
                "plain": ncc_score(plain_patch, truth),
                "weighted": ncc_score(weighted_patch, truth),
            }
        entries.append(entry)
        results.append(result)
        cand_lists.append(cands)

    stats = None
    if truth is not None and results:
        cs = corpus_stats(results, cand_lists)
        stats = {
            "mean_side_plain": cs.mean_side_plain,
            "mean_side_weighted": cs.mean_side_weighted,
            "boundary_similarity_plain": cs.boundary_similarity_plain,
            "boundary_similarity_weighted": cs.boundary_similarity_weighted,
        }

    if first_error is None and not results:
        first_error = {"stage": "regions", "type": "NoExtractableSubareas",
                       "message": "no subarea was large enough to sample"}

    report = {
        "config": _config_echo(cfg),
        "subareas": entries,
        "corpus_stats": stats,
        "error": first_error,
    }
    write_report(report, out_dir / "report.json")
    try:
        (out_dir / "timings.json").write_text(
            json.dumps(timings_doc, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise UnwritableOutput(f"cannot write timings: {exc}") from exc
    return 0 if first_error is None else 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="retex",
        description="Extract the representative region texture of a "
                    "repetitive image.",
    )
    p.add_argument("--image", required=True, help="input RGB PNG")
    p.add_argument("--labels", help="label raster PNG (subarea mode)")
    p.add_argument("--class-map", help="JSON file mapping pixel value to class name")
    p.add_argument("--background-class", help="name of the background class")
    p.add_argument("--separator-classes",
                   help="comma-separated class names that split subareas")
    p.add_argument("--mask", help="8-bit mask PNG (single-region mode)")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--min-side", type=int, default=16)
    p.add_argument("--max-side", type=int, default=48)
    p.add_argument("--coverage", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embedder", choices=["autoencoder", "descriptor"],
                   default="autoencoder")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--k-set", default="3,4,5,6")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--overlay", action="store_true",
                   help="emit the cluster overlay image")
    p.add_argument("--tile-preview", metavar="WxH",
                   help="emit a tiled preview of the weighted texture")
    p.add_argument("--eval-truth", metavar="PATH",
                   help="ground-truth tile PNG; adds NCC scores to the report")
    return p


def _config_from_args(args) -> PipelineConfig:
    class_map = None
    if args.class_map:
        try:
            raw = json.loads(Path(args.class_map).read_text(encoding="utf-8"))
            class_map = {int(k): str(v) for k, v in raw.items()}
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read class map {args.class_map}: {exc}")

    separators = tuple(
        s.strip() for s in (args.separator_classes or "").split(",") if s.strip()
    )

    try:
        k_set = tuple(sorted({int(s) for s in args.k_set.split(",") if s.strip()}))
    except ValueError:
        raise ConfigError(f"invalid --k-set {args.k_set!r}")

    tile_preview = None
    if args.tile_preview:
        m = re.fullmatch(r"(\d+)x(\d+)", args.tile_preview)
        if not m or int(m.group(1)) < 1 or int(m.group(2)) < 1:
            raise ConfigError(f"invalid --tile-preview {args.tile_preview!r}")
        tile_preview = (int(m.group(1)), int(m.group(2)))

    try:
        sampler = SamplerConfig(
            sample_count=args.samples,
            min_side=args.min_side,
            max_side=args.max_side,
            coverage_threshold=args.coverage,
            max_attempts=max(200000, 20 * args.samples),
            seed=args.seed,
        )
        training_kwargs = {}
        if args.epochs is not None:
            if args.epochs < 1:
                raise ValueError("--epochs must be >= 1")
            training_kwargs["epochs"] = args.epochs
        training = TrainingConfig(**training_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc))

    return PipelineConfig(
        image_path=args.image,
        out_dir=args.out_dir,
        labels_path=args.labels,
        class_map=class_map,
        background_class=args.background_class,
        separator_classes=separators,
        mask_path=args.mask,
        sampler=sampler,
        embedder=args.embedder,
        training=training,
        k_set=k_set,
        seed=args.seed,
        overlay=args.overlay,
        tile_preview=tile_preview,
        eval_truth=args.eval_truth,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_pipeline(cfg)
    except UnwritableOutput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
