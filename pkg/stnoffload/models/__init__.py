# ------------------------------------------------------------------------
# stnoffload
# ------------------------------------------------------------------------
from . import schemes  # noqa: F401  registers the schemes
from .registry import SCHEME_BUILD_FUNCS


def build_scheme(cfg, name, graph, seed=None):
    """Build the offloading scheme registered as ``name`` for ``graph``."""
    return SCHEME_BUILD_FUNCS.build(name, cfg, graph, cfg.seed if seed is None else seed)
