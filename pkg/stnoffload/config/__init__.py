"""
Experiment presets and config loading.

A run's effective config is the preset (a python config module in this
package) with the user's JSON/YAML document merged on top, then command-line
``--options`` overrides, then the seed override.
"""
import io
import json
import logging
import os
import os.path as osp

import yaml

from ..util.slconfig import BASE_KEY, SLConfig
from ..util.slio import slload
from .schema import SCHEMA_VERSION, ConfigError, validate_config

logger = logging.getLogger(__name__)

_CORE3 = osp.join(osp.dirname(__file__), "core3.py")

# "core3" is a short alias of the evaluation topology
PRESETS = {
    "paper-fig4": _CORE3,
    "core3": _CORE3,
}
DEFAULT_PRESET = "paper-fig4"
SEED_ENV = "STN_SIM_SEED"

__all__ = ["PRESETS", "ConfigError", "load_preset", "load_config", "validate_config", "SCHEMA_VERSION"]


def load_preset(name=DEFAULT_PRESET):
    if name not in PRESETS:
        raise ConfigError(BASE_KEY, f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return SLConfig.fromfile(PRESETS[name])


def _read_document(path):
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        file_format = "yaml" if path.lower().endswith((".yml", ".yaml")) else "json"
        doc = slload(io.StringIO(text), file_format=file_format)
    except json.JSONDecodeError as e:
        raise ConfigError("<document>", e.msg, e.lineno)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError("<document>", str(e), mark.line + 1 if mark is not None else None)
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be a mapping", 1)
    return doc, text


def _resolve_base(doc, path, preset=None):
    """Base config of a user document: its ``_base_``, else ``preset``, else the default preset."""
    if BASE_KEY in doc and preset is not None:
        logger.warning("%s names its own base %r; preset %r is not used", path, doc[BASE_KEY], preset)
    base = doc.pop(BASE_KEY, preset or DEFAULT_PRESET)
    if base in PRESETS:
        return load_preset(base).to_dict()
    base_path = base if osp.isabs(base) else osp.join(osp.dirname(osp.abspath(path)), base)
    if not osp.isfile(base_path):
        raise ConfigError(BASE_KEY, f"base config {base!r} is neither a preset nor a file")
    return SLConfig.fromfile(base_path).to_dict()


def load_config(path=None, options=None, seed=None, preset=None, env=None):
    """Build and validate the effective config.

    The document is merged over its ``_base_``, or over ``preset`` when it
    names none.

    Seed precedence: ``seed`` argument, then a seed written in the user
    document, then the ``STN_SIM_SEED`` environment variable, then the preset.

    Returns:
        (SLConfig, str): the config and where its seed came from.
    """
    env = os.environ if env is None else env
    text = None
    if path is not None:
        doc, text = _read_document(path)
        base = _resolve_base(doc, path, preset)
    else:
        doc = {}
        base = load_preset(preset or DEFAULT_PRESET).to_dict()

    merged = SLConfig._merge_a_into_b(doc, base)
    cfg = SLConfig(merged, cfg_text=text, filename=path)
    if options:
        cfg.merge_from_dict(options)

    if seed is not None:
        cfg.seed, seed_source = int(seed), "command line"
    elif "seed" in doc or (options and "seed" in options):
        seed_source = "config"
    elif env.get(SEED_ENV):
        try:
            cfg.seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError("seed", f"{SEED_ENV}={env[SEED_ENV]!r} is not an integer")
        seed_source = SEED_ENV
    else:
        seed_source = "preset"

    validate_config(cfg, text)
    logger.debug("seed %d taken from %s", cfg.seed, seed_source)
    return cfg, seed_source
