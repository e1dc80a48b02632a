from .box import (
    IndexBox,
    bounding_box,
    box_subtract,
    boxes_subtract,
    coarsen,
    coarsen_box,
    empty_box,
    periodic_shifts,
    refine,
    refine_box,
    replace_dims,
    restrict_dims,
    total_size,
)
from .cluster import TagField, cluster_tags
from .hierarchy import (
    Patch,
    PatchHierarchy,
    PatchLevel,
    check_proper_nesting,
    compute_sub_patches,
    covered_by_union,
)

__all__ = [
    "IndexBox", "bounding_box", "box_subtract", "boxes_subtract", "coarsen", "coarsen_box", "empty_box",
    "periodic_shifts", "refine", "refine_box", "replace_dims", "restrict_dims", "total_size",
    "TagField", "cluster_tags",
    "Patch", "PatchHierarchy", "PatchLevel", "check_proper_nesting", "compute_sub_patches", "covered_by_union",
]
