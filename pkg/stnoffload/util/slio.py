# ==========================================================
# File handlers after mmcv: json, jsonl and yaml
# ==========================================================

import json
import re
from abc import ABCMeta, abstractmethod
from pathlib import Path

import yaml

try:
    from yaml import CSafeDumper as SafeDumper
    from yaml import CSafeLoader as SafeLoader
except ImportError:
    from yaml import SafeDumper, SafeLoader


class ConfigYamlLoader(SafeLoader):
    """SafeLoader reading floats by YAML 1.2 rules, so ``27e9`` and ``1.0e6`` are numbers."""


ConfigYamlLoader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?[0-9][0-9_]*[eE][-+]?[0-9]+
        |[-+]?\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


class BaseFileHandler(metaclass=ABCMeta):
    @abstractmethod
    def load_from_fileobj(self, file):
        pass

    @abstractmethod
    def dump_to_str(self, obj, **kwargs):
        pass

    def dump_to_fileobj(self, obj, file, **kwargs):
        file.write(self.dump_to_str(obj, **kwargs))

    def load_from_path(self, filepath):
        with open(filepath, "r", encoding="utf-8") as f:
            return self.load_from_fileobj(f)

    def dump_to_path(self, obj, filepath, **kwargs):
        with open(filepath, "w", encoding="utf-8") as f:
            self.dump_to_fileobj(obj, f, **kwargs)


class JsonHandler(BaseFileHandler):
    """Canonical JSON: sorted keys, two-space indent, trailing newline.

    Config hashes are taken over this form, so it must stay byte-stable.
    """

    def load_from_fileobj(self, file):
        return json.load(file)

    def dump_to_str(self, obj, **kwargs):
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("indent", 2)
        kwargs.setdefault("ensure_ascii", False)
        return json.dumps(obj, **kwargs) + "\n"


class JsonLinesHandler(BaseFileHandler):
    """One record per line; task lists and path-decision logs."""

    def load_from_fileobj(self, file):
        return [json.loads(line) for line in file if line.strip()]

    def dump_to_str(self, obj, **kwargs):
        kwargs.setdefault("sort_keys", True)
        kwargs.setdefault("ensure_ascii", False)
        return "".join(json.dumps(record, **kwargs) + "\n" for record in obj)


class YamlHandler(BaseFileHandler):
    def load_from_fileobj(self, file):
        return yaml.load(file, Loader=ConfigYamlLoader)

    def dump_to_str(self, obj, **kwargs):
        kwargs.setdefault("sort_keys", False)
        return yaml.dump(obj, Dumper=SafeDumper, **kwargs)


file_handlers = {
    "json": JsonHandler(),
    "jsonl": JsonLinesHandler(),
    "yaml": YamlHandler(),
    "yml": YamlHandler(),
}


def _handler(file, file_format):
    if file_format is None:
        if not isinstance(file, str):
            raise ValueError("file_format is needed when file is not a path")
        file_format = file.rsplit(".", 1)[-1].lower()
    if file_format not in file_handlers:
        raise TypeError(f"unsupported format {file_format!r}, expected one of {sorted(file_handlers)}")
    return file_handlers[file_format]


def slload(file, file_format=None):
    """Load a json, jsonl or yaml document from a path or an open file.

    The format follows the file extension unless ``file_format`` is given.
    """
    if isinstance(file, Path):
        file = str(file)
    handler = _handler(file, file_format)
    if isinstance(file, str):
        return handler.load_from_path(file)
    if hasattr(file, "read"):
        return handler.load_from_fileobj(file)
    raise TypeError('"file" must be a path or a file object')


def sldump(obj, file=None, file_format=None, **kwargs):
    """Dump ``obj`` to a path or an open file, or return it as a string when ``file`` is None."""
    if isinstance(file, Path):
        file = str(file)
    handler = _handler(file, file_format)
    if file is None:
        return handler.dump_to_str(obj, **kwargs)
    if isinstance(file, str):
        handler.dump_to_path(obj, file, **kwargs)
    elif hasattr(file, "write"):
        handler.dump_to_fileobj(obj, file, **kwargs)
    else:
        raise TypeError('"file" must be a path or a file object')
