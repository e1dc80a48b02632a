"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built and importable; setting
VPAMR_PURE_PYTHON=1 in the environment forces the numpy versions.
"""
import os

from . import _pykernels as python

compiled = None
if os.environ.get("VPAMR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:
        compiled = None

active = compiled if compiled is not None else python
BACKEND = active.BACKEND

weno5_refine_axis = active.weno5_refine_axis
linear5_refine_axis = active.linear5_refine_axis
face_values = active.face_values
vlasov_fluxes = active.vlasov_fluxes
flux_divergence = active.flux_divergence


def use(backend: str) -> None:
    """Switch the module-level kernels to 'numpy' or 'cython' at runtime."""
    global active, BACKEND, weno5_refine_axis, linear5_refine_axis, face_values
    global vlasov_fluxes, flux_divergence
    if backend == "numpy":
        mod = python
    elif backend == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available")
        mod = compiled
    else:
        raise ValueError(f"unknown backend {backend!r}")
    active = mod
    BACKEND = mod.BACKEND
    weno5_refine_axis = mod.weno5_refine_axis
    linear5_refine_axis = mod.linear5_refine_axis
    face_values = mod.face_values
    vlasov_fluxes = mod.vlasov_fluxes
    flux_divergence = mod.flux_divergence
