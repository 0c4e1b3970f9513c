"""Representative region texture extraction from repetitive images.

The library samples square candidate textures on a background mask,
embeds them (augmented autoencoder or a deterministic descriptor),
clusters the embeddings with K-Means selected by the Davies-Bouldin
index, and picks the candidate nearest the largest cluster's center,
both plainly and with a width / boundary-similarity weighting.
"""

from .cluster import (
    ClusterModel,
    davies_bouldin,
    derive_seed,
    kmeans,
    largest_cluster,
    select_k,
)
from .embedder import (
    AugmentationSpec,
    AugmentedPair,
    EMBED_DIM,
    EmbedderModel,
    TrainingConfig,
    canonicalize,
    descriptor_embed,
    embed,
    embed_batch,
    gradient_check,
    load_model,
    make_augmented_pair,
    save_model,
    train_autoencoder,
)
from .evalkit import (
    Contamination,
    CorpusStats,
    SynthSpec,
    contamination_fraction,
    corpus_stats,
    generate_tiled_image,
    ncc_score,
    periodic_tile,
    translation_invariance_fraction,
)
from .raster import (
    GrayRaster,
    LabelRaster,
    MaskRaster,
    RasterImage,
    bilinear_resize,
    crop,
    load_image,
    load_labels,
    load_mask,
    mask_from_labels,
    save_image,
    save_labels,
    save_mask,
    to_grayscale,
)
from .regions import Subarea, find_subareas, min_extractable_pixels, subarea_mask
from .sampler import Candidate, SamplerConfig, coverage_fraction, sample_candidates
from .selector import (
    SelectionResult,
    boundary_cosine_mean,
    boundary_factor,
    center_distances,
    select,
    weight,
    weighted_distance,
    width_factor,
)
from .texops import render_cluster_overlay, tile_texture
from .cli import PipelineConfig, run_pipeline, write_report

__version__ = "0.1.0"

__all__ = [
    "AugmentationSpec",
    "AugmentedPair",
    "Candidate",
    "ClusterModel",
    "Contamination",
    "CorpusStats",
    "EMBED_DIM",
    "EmbedderModel",
    "GrayRaster",
    "LabelRaster",
    "MaskRaster",
    "PipelineConfig",
    "RasterImage",
    "SamplerConfig",
    "SelectionResult",
    "Subarea",
    "SynthSpec",
    "TrainingConfig",
    "bilinear_resize",
    "boundary_cosine_mean",
    "boundary_factor",
    "canonicalize",
    "center_distances",
    "contamination_fraction",
    "corpus_stats",
    "coverage_fraction",
    "crop",
    "davies_bouldin",
    "derive_seed",
    "descriptor_embed",
    "embed",
    "embed_batch",
    "find_subareas",
    "generate_tiled_image",
    "gradient_check",
    "kmeans",
    "largest_cluster",
    "load_image",
    "load_labels",
    "load_mask",
    "load_model",
    "make_augmented_pair",
    "mask_from_labels",
    "min_extractable_pixels",
    "ncc_score",
    "periodic_tile",
    "render_cluster_overlay",
    "run_pipeline",
    "sample_candidates",
    "save_image",
    "save_labels",
    "save_mask",
    "save_model",
    "select",
    "select_k",
    "subarea_mask",
    "tile_texture",
    "to_grayscale",
    "train_autoencoder",
    "translation_invariance_fraction",
    "weight",
    "weighted_distance",
    "width_factor",
]
