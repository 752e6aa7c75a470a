"""Analog in-memory decision-forest inference: training, mapping, simulation."""

__version__ = "0.1.0"

from .arch import (
    ArchConfig,
    InferenceTrace,
    ProgrammedArchitecture,
    SweepResult,
    evaluate_accuracy,
    infer,
    infer_batch,
    program,
    program_forest,
    sweep,
)
from .cell import CellParams, Parasitics
from .datasets import (
    gaussian_blobs,
    grid_classification,
    off_grid_inputs,
    load_csv,
    load_iris,
    save_csv,
    sparse_informative,
    train_test_split,
)
from .device import (
    ConductancePair,
    DeviceModel,
    ThresholdRange,
    build_calibration,
    encode_range,
    feature_to_voltage,
    inject_noise,
    quantize_range,
    quantize_thresholds,
    reference_current,
)
from .errors import (
    CalibrationError,
    CamForestError,
    ConfigError,
    DataError,
    InvariantError,
    ModelFormatError,
)
from .forest import Forest, Node, Tree, from_json, to_json, train_forest, train_tree
from .mapper import (
    MapRow,
    RowSchedule,
    ThresholdMap,
    TiledPlan,
    compile_forest,
    extract_paths,
    map_predict,
    pack_tiles,
    plan_from_json,
    plan_inference_row_sets,
    plan_to_json,
    raw_cells,
    reorder,
)
from .perf import (
    PerfConfig,
    PerfReport,
    ScaleFactors,
    choose_r_out,
    elmore_delay,
    elmore_delay_sum,
    p_dl,
    p_ml,
    p_static,
    perf_grid,
    perf_report,
    report_for_plan,
    throughput,
)

__all__ = [
    "CellParams",
    "Parasitics",
    "DeviceModel",
    "ThresholdRange",
    "ConductancePair",
    "build_calibration",
    "encode_range",
    "feature_to_voltage",
    "inject_noise",
    "quantize_range",
    "quantize_thresholds",
    "reference_current",
    "Node",
    "Tree",
    "Forest",
    "train_tree",
    "train_forest",
    "to_json",
    "from_json",
    "MapRow",
    "ThresholdMap",
    "TiledPlan",
    "RowSchedule",
    "extract_paths",
    "map_predict",
    "reorder",
    "pack_tiles",
    "raw_cells",
    "compile_forest",
    "plan_inference_row_sets",
    "plan_to_json",
    "plan_from_json",
    "ArchConfig",
    "ProgrammedArchitecture",
    "InferenceTrace",
    "SweepResult",
    "program",
    "program_forest",
    "infer",
    "infer_batch",
    "evaluate_accuracy",
    "sweep",
    "PerfConfig",
    "PerfReport",
    "ScaleFactors",
    "p_static",
    "p_dl",
    "p_ml",
    "elmore_delay",
    "elmore_delay_sum",
    "choose_r_out",
    "throughput",
    "perf_report",
    "report_for_plan",
    "perf_grid",
    "load_csv",
    "save_csv",
    "load_iris",
    "train_test_split",
    "grid_classification",
    "off_grid_inputs",
    "gaussian_blobs",
    "sparse_informative",
    "CamForestError",
    "ConfigError",
    "DataError",
    "ModelFormatError",
    "CalibrationError",
    "InvariantError",
    "__version__",
]
