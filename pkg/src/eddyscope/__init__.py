"""eddyscope: ensemble uncertainty visualization.

Two summarization pipelines over gridded ensembles: per-voxel probability
distributions propagated through direct volume rendering, and probabilistic
Morse-complex maps over 2D slices with entropy/agreement exploration.
"""

from .grid import (EnsembleManifest, ScalarGrid, VectorGrid, load_manifest,
                   load_raw_volume, negate, save_manifest, slice_z, subsample,
                   synth_eddy_ensemble, velocity_magnitude, write_raw)
from .models import (GaussianSummary, GmmSummary, MeanSummary, PointSummary,
                     QuantileSummary, Summary, UniformSummary, expected_tf,
                     fit, load_summary, quartile_split, sample)
from .transfer import TransferFunction, default_tf
from .rendering import (Camera, Image, RenderConfig, default_camera, image_diff,
                     render, render_quartile_view, render_time_series)
from .morse import (DestinationMap, PersistenceGraph, PersistencePairing,
                    cell_boundaries, compute_destinations, compute_persistence,
                    persistence_graph, simplification_scale_select, simplify)
from .emorse import (LabelAssignment, MandatoryRegion, ProbabilisticMap,
                     label_kmeans, label_morse_mapping, label_nearest_mandatory,
                     mandatory_maxima, palette_for, probabilistic_map, query,
                     view_image)
from .pipeline import (build_morse_pipeline, build_probabilistic_map,
                       prepare_ensemble_2d)

__version__ = "0.1.0"
