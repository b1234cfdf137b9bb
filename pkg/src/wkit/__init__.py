"""Wireframe parsing toolkit.

Decodes line-segment candidates from keypoint/shift maps, assembles them
into a sparse candidate graph, re-scores them with a residual graph
convolutional network, evaluates with structural average precision, and
fuses 2D detections with depth-derived planes into labeled 3D wireframes.
"""

FORMAT_VERSION = 1  # bump when any on-disk format changes

from .assemble import AssembleConfig, CandidateGraph, Quadruplet, build_graph, make_proposals, match_endpoints
from .config import PipelineConfig, config_from_dict, load_config
from .decode import DecodeConfig, Keypoint, apply_offsets, canonical_shift, nms_local_maxima, read_shift
from .gnn import GnnModel, backward, forward, gcn_layer, init_model, load_model, normalize_adjacency, save_model, train_toy
from .loipool import LineFeatures, PoolConfig, bilinear, loi_pool, pool_many, sample_points
from .metrics import SapConfig, SapResult, ScoredSegment, sap, scale_to_eval
from .supervision import FocalParams, GtMaps, LossWeights, bce_junction_loss, flip_annotation, focal_center_loss, l1_regression_loss, make_gt_maps, total_loss
from .tensorio import Annotation, CameraFrame, ContractError, FormatError, Grid, NumericError, ValidationError, read_annotation, read_camera, read_grid, write_annotation, write_camera, write_grid
from .wireframe3d import FrameObservation, FusionConfig, LabeledLine, Plane, PlaneSet, WireframeModel, classify_line, detect_planes, fuse_sequence, merge_creases, merge_plane, plane_intersection
