"""
Validation of effective experiment configs.

``CONFIG_SCHEMA`` is a JSON Schema (draft 7) document. Integers are strict
(``2.0`` is not an integer) and the ``finite`` keyword rejects NaN and
infinities, which plain JSON Schema lets through. Checks that relate several
fields (range bounds, increasing ladders) run after the schema.
"""
import math
from numbers import Real

import jsonschema
from jsonschema import Draft7Validator
from jsonschema.exceptions import ValidationError

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        self.message = message
        where = f" (line {line})" if line is not None else ""
        super(ConfigError, self).__init__(f"{field}{where}: {message}")


def _number(lo=None, hi=None, lo_open=False, hi_open=False, nullable=False):
    s = {"type": ["number", "null"] if nullable else "number", "finite": True}
    if lo is not None:
        s["exclusiveMinimum" if lo_open else "minimum"] = lo
    if hi is not None:
        s["exclusiveMaximum" if hi_open else "maximum"] = hi
    return s


def _integer(lo=None, hi=None):
    s = {"type": "integer"}
    if lo is not None:
        s["minimum"] = lo
    if hi is not None:
        s["maximum"] = hi
    return s


def _enum(*choices):
    return {"type": "string", "enum": list(choices)}


def _section(properties, optional=()):
    return {
        "type": "object",
        "properties": properties,
        "required": [k for k in properties if k not in optional],
        "additionalProperties": False,
    }


POS = _number(lo=0, lo_open=True)
NONNEG = _number(lo=0)
UNIT = _number(lo=0, hi=1)
BOOL = {"type": "boolean"}
RANGE = {"type": "array", "items": _number(lo=0, lo_open=True), "minItems": 2, "maxItems": 2}

NODE = _section(
    {
        "id": _integer(lo=0),
        "kind": _enum("Device", "Edge", "Gateway", "Satellite", "GroundStation", "User"),
        "position": {"type": "array", "items": _number(), "minItems": 3, "maxItems": 3},
        "compute_capacity": _integer(lo=0),
    },
    optional=("compute_capacity",),
)

LINK = _section(
    {
        "src": _integer(lo=0),
        "dst": _integer(lo=0),
        "band": _enum("Ground", "Satellite"),
        "bandwidth_hz": POS,
        "tx_power_w": POS,
        "gains": _section({"tx": POS, "rx": POS}, optional=("tx", "rx")),
        "gain_mean": POS,
        "gain_sigma": NONNEG,
        "bidirectional": BOOL,
    },
    optional=("gains", "gain_mean", "gain_sigma", "bidirectional"),
)

LEVEL = _section({"bitrate_bps": POS, "label": {"type": "string"}, "segment_bytes": POS})

CONFIG_SCHEMA = _section(
    {
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": _integer(lo=0),
        "mode": _enum("train", "eval", "compare"),
        "topology": _section(
            {
                "nodes": {"type": "array", "items": NODE, "minItems": 1},
                "links": {"type": "array", "items": LINK},
                "sat_user_pairs": {
                    "type": "array",
                    "items": _section({"satellite": _integer(lo=0), "users": {"type": "array", "items": _integer()}}),
                },
            }
        ),
        "channel": _section(
            {
                "noise_temperature_k": POS,
                "noise_psd_dbm_hz": _number(nullable=True),
                "carrier_hz": POS,
                "isl_noise": _enum("psd", "bandwidth"),
            },
            optional=("isl_noise",),
        ),
        "workload": _section(
            {
                "tasks_per_step": _integer(lo=0),
                "steps_per_episode": _integer(lo=1),
                "mix_ratio": UNIT,
                "monitoring_bytes_range": RANGE,
                "monitoring_cycles_per_byte": POS,
                "video_cycles_per_byte_range": RANGE,
                "monitoring_deadline_s": POS,
                "video_deadline_s": POS,
                "deadline_jitter": _number(lo=0, hi=1, hi_open=True),
            },
            optional=("deadline_jitter",),
        ),
        "ladder": _section(
            {"levels": {"type": "array", "items": LEVEL, "minItems": 2}, "segment_seconds": POS}
        ),
        "offload": _section(
            {
                "slot_s": POS,
                "compute_share": _number(lo=0, hi=1, lo_open=True),
                "kappa_v": NONNEG,
                "eta_v": NONNEG,
                "upload_gain": _enum("sampled", "mean"),
            }
        ),
        "qoe": _section({"eta": NONNEG, "kappa": NONNEG, "nu": NONNEG, "bitrate_scale_bps": POS}),
        "reward": _section(
            {
                "delta": NONNEG,
                "omega": NONNEG,
                "alpha_delay": NONNEG,
                "beta_comp": UNIT,
                "gamma_comm": UNIT,
                "shared": BOOL,
            }
        ),
        "pathsel": _section(
            {
                "alpha_mix": UNIT,
                "count_max": _integer(lo=1),
                "link_weight": _enum("propagation_delay", "hop_count"),
                "log_decisions": BOOL,
            },
            optional=("log_decisions",),
        ),
        "sac": _section(
            {
                "alpha_h": NONNEG,
                "gamma": _number(lo=0, hi=1, hi_open=True),
                "rho": UNIT,
                "lr": NONNEG,
                "momentum": _number(lo=0, hi=1, hi_open=True),
                "batch_size": _integer(lo=1),
                "buffer_size": _integer(lo=1),
                "hidden": {"type": "array", "items": _integer(lo=1)},
                "warmup": _integer(lo=0),
                "threads": _integer(lo=1),
            }
        ),
        "observation": _section({"max_task_bytes": POS, "max_deadline_s": POS}),
        "train": _section({"episodes": _integer(lo=0), "checkpoint_every": _integer(lo=1)}),
        "evaluate": _section({"episodes": _integer(lo=1)}),
        "compare": _section(
            {
                "schemes": {"type": "array", "items": {"type": "string"}},
                "episodes": _integer(lo=1),
                "workers": _integer(lo=1),
                "checkpoints": {"type": "object", "additionalProperties": {"type": "string"}},
            },
            optional=("checkpoints",),
        ),
        "metrics": _section(
            {"warmup_tasks": _integer(lo=1), "window": _integer(lo=1), "volume_step": _integer(lo=1)}
        ),
    }
)


def _finite(validator, enabled, instance, schema):
    if enabled and isinstance(instance, Real) and not isinstance(instance, bool) and not math.isfinite(instance):
        yield ValidationError(f"{instance!r} is not finite")


def _is_strict_integer(checker, instance):
    return isinstance(instance, int) and not isinstance(instance, bool)


ConfigValidator = jsonschema.validators.extend(
    Draft7Validator,
    validators={"finite": _finite},
    type_checker=Draft7Validator.TYPE_CHECKER.redefine("integer", _is_strict_integer),
)


def _find_nth(text, needle, start, n):
    idx = text.find(needle, start)
    while idx >= 0 and n > 0:
        idx = text.find(needle, idx + 1)
        n -= 1
    return idx


def locate(text, path):
    """1-based line of the last key of ``path`` in a JSON/YAML document, or None.

    Keys are searched in order, each after the position of its parent, so a
    repeated leaf name resolves to the occurrence inside the right section.
    A list index ``i`` selects the ``i``-th occurrence of the key that follows.
    """
    if not text:
        return None
    pos, found, skip = 0, None, 0
    for part in path:
        if isinstance(part, int):
            skip = part
            continue
        for needle in (f'"{part}"', f"{part}:"):
            idx = _find_nth(text, needle, pos, skip)
            if idx >= 0:
                break
        skip = 0
        if idx < 0:
            break
        pos = found = idx
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _dotted(path):
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else ("." if out else "") + part
    return out


def _explain(error: ValidationError):
    """(path, message) of a schema error, pointing at the offending key."""
    path = list(error.absolute_path)
    if error.validator == "additionalProperties":
        known = error.schema.get("properties", {})
        extra = [k for k in error.instance if k not in known]
        return path + extra[:1], "unknown field"
    if error.validator == "required":
        missing = [k for k in error.validator_value if k not in error.instance]
        return path + missing[:1], "missing required field"
    return path, error.message


def _fail(path, msg, text):
    raise ConfigError(_dotted(path), msg, locate(text, path))


def _check_ranges(cfg, text):
    for name in ("monitoring_bytes_range", "video_cycles_per_byte_range"):
        lo, hi = cfg["workload"][name]
        if lo > hi:
            _fail(["workload", name], f"expected low <= high, got [{lo}, {hi}]", text)
    levels = cfg["ladder"]["levels"]
    for i in range(1, len(levels)):
        for key in ("bitrate_bps", "segment_bytes"):
            if levels[i][key] <= levels[i - 1][key]:
                _fail(["ladder", "levels", i, key], "ladder must be strictly increasing", text)


def validate_config(cfg, text=None):
    """Check every field of an effective config; raise ConfigError on the first problem.

    Errors are ordered by their position in ``text``, the source of the user
    document, which also supplies the reported line numbers.
    """
    if hasattr(cfg, "to_dict"):
        cfg = cfg.to_dict()
    problems = []
    for error in ConfigValidator(CONFIG_SCHEMA).iter_errors(cfg):
        path, msg = _explain(error)
        line = locate(text, path)
        problems.append((line is None, line or 0, _dotted(path), path, msg))
    if problems:
        _, line, field, path, msg = min(problems, key=lambda p: p[:3])
        raise ConfigError(field, msg, locate(text, path))
    _check_ranges(cfg, text)
    return cfg
