"""Fixed-target ERT analysis and single-switch dynamic algorithm selection."""
from .model import (
    DEFAULT_GRID,
    ErtTable,
    Finite,
    NeverHit,
    ProblemKey,
    RunSet,
    RunTrace,
    TargetGrid,
    nearest_grid_index,
    target_value,
)
from .metrics import admissible_counts, admissible_tables, ert, ert_table, hitting_time, is_admissible
from .engine import SwitchTriple, VbsReport, composed_ert, sbs, speedup_matrix, vbs_dyn, vbs_static
from .contribution import i1, i2, pair_matrix, select_subset, switch_markers
from .ingest import DatasetIndex, build_index, export_canonical, parse_canonical, parse_coco_dat, parse_coco_info

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_GRID", "ErtTable", "Finite", "NeverHit", "ProblemKey", "RunSet", "RunTrace", "TargetGrid",
    "nearest_grid_index", "target_value",
    "admissible_counts", "admissible_tables", "ert", "ert_table", "hitting_time", "is_admissible",
    "SwitchTriple", "VbsReport", "composed_ert", "sbs", "speedup_matrix", "vbs_dyn", "vbs_static",
    "i1", "i2", "pair_matrix", "select_subset", "switch_markers",
    "DatasetIndex", "build_index", "export_canonical", "parse_canonical", "parse_coco_dat", "parse_coco_info",
]
