"""External property recomputation hooks.

A hook is any callable `recompute(mesh, property_kind) -> sequence of float`
returning one value per snapshot, e.g. a wrapper around a full flow solve of
the coarsened mesh. It is referenced either by a dotted module path
(`package.module` or `package.module:function`) or by a path to a `.py` file.
"""

from __future__ import annotations

import importlib
import importlib.util
import logging
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from meshdqn.errors import ConfigError, PropertyError
from meshdqn.flow.models import PropertyKind, PropertyVector
from meshdqn.mesh.models import TriMesh

logger = logging.getLogger(__name__)

RecomputeHook = Callable[[TriMesh, PropertyKind], Sequence[float]]

DEFAULT_HOOK_NAME = "recompute"

_PATH_CACHE: dict[str, RecomputeHook] = {}


def _split(reference: str) -> tuple[str, str]:
    target, _, name = reference.partition(":")
    return target, name or DEFAULT_HOOK_NAME


def _load_from_module(module_path: str, name: str) -> RecomputeHook | None:
    try:
        mod = importlib.import_module(module_path)
        fn = getattr(mod, name, None)
        if callable(fn):
            return fn
    except Exception:
        logger.exception("Failed loading recompute hook module: %s", module_path)
    return None


def _load_from_path(path: str, name: str) -> RecomputeHook | None:
    key = f"{path}:{name}"
    if key in _PATH_CACHE:
        return _PATH_CACHE[key]
    try:
        module_name = f"meshdqn_hook_{abs(hash(path))}"
        spec = importlib.util.spec_from_file_location(module_name, path)
        if spec and spec.loader:
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            fn = getattr(mod, name, None)
            if callable(fn):
                _PATH_CACHE[key] = fn
                return fn
    except Exception:
        logger.exception("Failed loading recompute hook path: %s", path)
    return None


def load_recompute_hook(reference: str) -> RecomputeHook:
    target, name = _split(reference)
    if target.endswith(".py") or "/" in target or "\\" in target:
        path = Path(target)
        if not path.is_file():
            raise ConfigError(f"recompute hook file not found: {path}")
        fn = _load_from_path(str(path.resolve()), name)
    else:
        fn = _load_from_module(target, name)
    if fn is None:
        raise ConfigError(f"recompute hook {reference!r} has no callable {name!r}")
    return fn


def run_recompute_hook(
    hook: RecomputeHook, mesh: TriMesh, kind: PropertyKind, n_snapshots: int
) -> PropertyVector:
    values = np.asarray(hook(mesh, kind), dtype=np.float64).reshape(-1)
    if values.shape[0] != n_snapshots:
        raise PropertyError(
            f"recompute hook returned {values.shape[0]} values for {n_snapshots} snapshots"
        )
    return PropertyVector(values, kind)
