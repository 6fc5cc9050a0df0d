# mmcv-style registry of scheme build functions
import inspect
from functools import partial


class Registry(object):
    """Maps a scheme name to ``build(cfg, graph, seed) -> Scheme``."""

    def __init__(self, name):
        self._name = name
        self._builders = dict()

    def __repr__(self):
        return f"{self.__class__.__name__}(name={self._name}, schemes={self.names()})"

    def __len__(self):
        return len(self._builders)

    def __contains__(self, scheme_name):
        return scheme_name in self._builders

    @property
    def name(self):
        return self._name

    def names(self):
        return sorted(self._builders)

    def get(self, scheme_name):
        return self._builders.get(scheme_name)

    def registe_with_name(self, module_name=None, force=False):
        return partial(self.register, module_name=module_name, force=force)

    def register(self, build_fn, module_name=None, force=False):
        if not inspect.isfunction(build_fn):
            raise TypeError(f"scheme builder must be a function, got {type(build_fn)}")
        params = list(inspect.signature(build_fn).parameters)
        if params[:3] != ["cfg", "graph", "seed"]:
            raise TypeError(f"{build_fn.__name__} must take (cfg, graph, seed), got {params}")
        scheme_name = module_name or build_fn.__name__
        if not force and scheme_name in self._builders:
            raise KeyError(f"scheme {scheme_name!r} is already registered in {self.name}")
        self._builders[scheme_name] = build_fn
        return build_fn

    def build(self, scheme_name, cfg, graph, seed):
        builder = self.get(scheme_name)
        if builder is None:
            raise KeyError(f"unknown scheme {scheme_name!r}; registered: {self.names()}")
        return builder(cfg, graph, seed)


SCHEME_BUILD_FUNCS = Registry("offloading schemes")
