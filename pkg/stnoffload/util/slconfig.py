# ==========================================================
# Attribute-style configs, after the mmcv Config
# ==========================================================
import ast
import copy
import os.path as osp
import sys
import types
from argparse import Action
from importlib import util as importlib_util

from addict import Dict
from yapf.yapflib.yapf_api import FormatCode

from .slio import sldump, slload

BASE_KEY = "_base_"
DELETE_KEY = "_delete_"
RESERVED_KEYS = ["filename", "text", "pretty_text", "get", "dump", "merge_from_dict", "to_dict"]
DOCUMENT_SUFFIXES = (".json", ".yaml", ".yml")


def check_file_exist(filename, msg_tmpl='file "{}" does not exist'):
    if not osp.isfile(filename):
        raise FileNotFoundError(msg_tmpl.format(filename))


class ConfigDict(Dict):
    """addict Dict that raises on missing keys instead of creating them."""

    def __missing__(self, name):
        raise KeyError(name)

    def __getattr__(self, name):
        try:
            return super(ConfigDict, self).__getattr__(name)
        except KeyError:
            raise AttributeError(f"'{self.__class__.__name__}' object has no attribute '{name}'") from None


def _is_config_value(name, value):
    # module-level helpers of a python preset are not settings
    if name == BASE_KEY:
        return True
    if name.startswith("_"):
        return False
    return not isinstance(value, (types.ModuleType, types.FunctionType, type))


def _load_py(filename):
    with open(filename, encoding="utf-8") as f:
        source = f.read()
    try:
        ast.parse(source)
    except SyntaxError as e:
        raise SyntaxError(f"There are syntax errors in config file {filename}: {e}") from None
    module_name = "_stn_cfg_" + osp.splitext(osp.basename(filename))[0]
    spec = importlib_util.spec_from_file_location(module_name, filename)
    mod = importlib_util.module_from_spec(spec)
    try:
        spec.loader.exec_module(mod)
    finally:
        sys.modules.pop(module_name, None)
    return {k: v for k, v in vars(mod).items() if not k.startswith("__") and _is_config_value(k, v)}


def _expand_dotted(options):
    """``{"sac.lr": 1e-3}`` -> ``{"sac": {"lr": 1e-3}}``."""
    nested = {}
    for full_key, value in options.items():
        *parents, leaf = full_key.split(".")
        d = nested
        for key in parents:
            d = d.setdefault(key, {})
        d[leaf] = value
    return nested


class SLConfig(object):
    """
    Experiment configuration with attribute access.

    Sources are python presets (their public module-level names), json and
    yaml documents. A source may name base files through ``_base_``; its own
    values are merged over theirs.

    Example:
        >>> cfg = SLConfig(dict(seed=1, sac=dict(gamma=0.99)))
        >>> cfg.sac.gamma
        0.99
        >>> cfg.merge_from_dict({"sac.gamma": 0.9})
        >>> cfg.sac.gamma
        0.9
    """

    @staticmethod
    def _file2dict(filename):
        filename = osp.abspath(osp.expanduser(filename))
        check_file_exist(filename)
        if filename.lower().endswith(".py"):
            cfg_dict = _load_py(filename)
        elif filename.lower().endswith(DOCUMENT_SUFFIXES):
            cfg_dict = slload(filename)
            if not isinstance(cfg_dict, dict):
                raise TypeError(f"config document {filename} must hold a mapping")
        else:
            raise IOError(f"config files must be .py, .json, .yaml or .yml, got {filename}")
        with open(filename, "r", encoding="utf-8") as f:
            cfg_text = f.read()

        bases = cfg_dict.pop(BASE_KEY, [])
        base_dict = {}
        for base in bases if isinstance(bases, list) else [bases]:
            sub, _ = SLConfig._file2dict(osp.join(osp.dirname(filename), base))
            clash = base_dict.keys() & sub.keys()
            if clash:
                raise KeyError(f"keys {sorted(clash)} are set by more than one base of {filename}")
            base_dict.update(sub)
        if base_dict:
            cfg_dict = SLConfig._merge_a_into_b(cfg_dict, base_dict)
        return cfg_dict, cfg_text

    @staticmethod
    def _merge_a_into_b(a, b):
        """Merge mapping ``a`` over ``b`` without touching either.

        Nested mappings merge key by key unless ``a`` sets ``_delete_=True``
        at that level. Integer keys index into lists of ``b``.
        """
        if not isinstance(a, dict):
            return a
        b = copy.copy(b)
        for k, v in a.items():
            if isinstance(b, list):
                try:
                    idx = int(k)
                except ValueError:
                    raise TypeError(f"list index must be an int, got {k!r}") from None
                b[idx] = SLConfig._merge_a_into_b(v, b[idx])
            elif isinstance(v, dict) and k in b:
                v = dict(v)
                if v.pop(DELETE_KEY, False):
                    b[k] = v
                elif isinstance(b[k], (dict, list)):
                    b[k] = SLConfig._merge_a_into_b(v, b[k])
                else:
                    raise TypeError(
                        f"{k} is a mapping in the child config but a {type(b[k]).__name__} in its base; "
                        f"set {DELETE_KEY}=True to replace it"
                    )
            else:
                b[k] = v
        return b

    @staticmethod
    def fromfile(filename):
        cfg_dict, cfg_text = SLConfig._file2dict(filename)
        return SLConfig(cfg_dict, cfg_text=cfg_text, filename=filename)

    def __init__(self, cfg_dict=None, cfg_text=None, filename=None):
        cfg_dict = {} if cfg_dict is None else cfg_dict
        if not isinstance(cfg_dict, dict):
            raise TypeError(f"cfg_dict must be a dict, but got {type(cfg_dict)}")
        for key in cfg_dict:
            if key in RESERVED_KEYS:
                raise KeyError(f"{key} is reserved for config file")
        object.__setattr__(self, "_cfg_dict", ConfigDict(cfg_dict))
        object.__setattr__(self, "_filename", filename)
        object.__setattr__(self, "_text", cfg_text or "")

    @property
    def filename(self):
        return self._filename

    @property
    def text(self):
        """Source text of the file the config was read from, used for error line numbers."""
        return self._text

    @property
    def pretty_text(self):
        """The config as a yapf-formatted python preset."""
        source = "".join(f"{k} = {v!r}\n" for k, v in self.to_dict().items())
        style = dict(based_on_style="pep8", split_before_expression_after_opening_paren=True, column_limit=100)
        text, _ = FormatCode(source, style_config=style)
        return text

    def to_dict(self):
        return self._cfg_dict.to_dict()

    def __repr__(self):
        return f"Config (path: {self.filename}): {self._cfg_dict.__repr__()}"

    def __len__(self):
        return len(self._cfg_dict)

    def __getattr__(self, name):
        return getattr(self._cfg_dict, name)

    def __getitem__(self, name):
        return self._cfg_dict[name]

    def __setattr__(self, name, value):
        self._cfg_dict[name] = ConfigDict(value) if isinstance(value, dict) else value

    __setitem__ = __setattr__

    def __contains__(self, name):
        return name in self._cfg_dict

    def __iter__(self):
        return iter(self._cfg_dict)

    def get(self, name, default=None):
        return self._cfg_dict.get(name, default)

    def dump(self, file=None):
        """Canonical json (to ``file`` or returned), or a python preset when ``file`` ends in ``.py``."""
        if file is not None and str(file).endswith(".py"):
            with open(file, "w", encoding="utf-8") as f:
                f.write(self.pretty_text)
            return None
        return sldump(self.to_dict(), file, file_format="json")

    def merge_from_dict(self, options):
        """Merge dotted ``section.key`` options, as parsed by DictAction.

        Examples:
            >>> cfg = SLConfig(dict(sac=dict(lr=3e-4)))
            >>> cfg.merge_from_dict({"sac.lr": 1e-3, "sac.gamma": 0.9})
            >>> cfg.to_dict()
            {'sac': {'lr': 0.001, 'gamma': 0.9}}
        """
        merged = SLConfig._merge_a_into_b(_expand_dotted(options), self.to_dict())
        object.__setattr__(self, "_cfg_dict", ConfigDict(merged))

    def deepcopy(self):
        return SLConfig(copy.deepcopy(self.to_dict()), cfg_text=self._text, filename=self._filename)


class DictAction(Action):
    """
    argparse action collecting ``KEY=VALUE`` pairs into a dict.

    Values are parsed as int, float, bool or None where possible; a comma
    makes a list, e.g. ``sac.hidden=64,64``.
    """

    @staticmethod
    def _parse_int_float_bool(val):
        for cast in (int, float):
            try:
                return cast(val)
            except ValueError:
                pass
        lowered = val.lower()
        if lowered in ("true", "false"):
            return lowered == "true"
        if lowered in ("none", "null"):
            return None
        return val

    def __call__(self, parser, namespace, values, option_string=None):
        options = {}
        for kv in values:
            if "=" not in kv:
                parser.error(f"{option_string} expects KEY=VALUE, got {kv!r}")
            key, val = kv.split("=", maxsplit=1)
            parsed = [self._parse_int_float_bool(v) for v in val.split(",")]
            options[key] = parsed[0] if len(parsed) == 1 else parsed
        setattr(namespace, self.dest, options)
