"""Access to the shipped map suite and map files on disk.

Maps ship as ``*.fl.json`` documents inside the package; the same format can
be loaded from any directory. Map ids are file stems (without ``.fl.json``).
"""

from __future__ import annotations

import os
from importlib import resources

from .domain import GridMap, load_map

_SUFFIX = ".fl.json"


class UnknownMap(KeyError):
    pass


def _builtin_dir():
    return resources.files("mip") / "maps"


def builtin_map_ids() -> list[str]:
    out = []
    for entry in _builtin_dir().iterdir():
        if entry.name.endswith(_SUFFIX):
            out.append(entry.name[: -len(_SUFFIX)])
    return sorted(out)


def load_builtin(map_id: str) -> GridMap:
    entry = _builtin_dir() / f"{map_id}{_SUFFIX}"
    try:
        text = entry.read_text()
    except (FileNotFoundError, OSError):
        raise UnknownMap(map_id) from None
    return load_map(text, name=map_id)


def load_map_file(path: str) -> tuple[str, GridMap]:
    name = os.path.basename(path)
    if name.endswith(_SUFFIX):
        name = name[: -len(_SUFFIX)]
    else:
        name = os.path.splitext(name)[0]
    with open(path) as fh:
        return name, load_map(fh.read(), name=name)


def load_map_dir(path: str) -> list[tuple[str, GridMap]]:
    out = []
    for entry in sorted(os.listdir(path)):
        if entry.endswith(_SUFFIX):
            out.append(load_map_file(os.path.join(path, entry)))
    if not out:
        raise UnknownMap(f"no {_SUFFIX} files in {path}")
    return out


def resolve_maps(arg: str | None) -> list[tuple[str, GridMap]]:
    """Resolve a --maps argument: None/'builtin', a directory, or one file."""
    if arg is None or arg == "builtin":
        return [(mid, load_builtin(mid)) for mid in builtin_map_ids()]
    if os.path.isdir(arg):
        return load_map_dir(arg)
    return [load_map_file(arg)]
