"""ASCII MSH v2.2 subset reader/writer.

Only `$MeshFormat`, `$Nodes` and `$Elements` carry meaning. Element type 1
(2-node line) is a boundary facet whose first tag is the physical tag,
mapped to a BoundaryTag; element type 2 (3-node triangle) is a mesh
triangle. `$PhysicalNames` and other sections are skipped.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from meshdqn.errors import InvalidMeshError, MeshParseError
from meshdqn.mesh.models import DEFAULT_PHYSICAL_TAGS, BoundaryTag, TriMesh, signed_areas

logger = logging.getLogger(__name__)

_LINE = 1
_TRIANGLE = 2


class _Lines:
    def __init__(self, text: str):
        self._lines = text.splitlines()
        self.number = 0

    def __iter__(self) -> Iterator[str]:
        return self

    def __next__(self) -> str:
        while self.number < len(self._lines):
            line = self._lines[self.number].strip()
            self.number += 1
            if line:
                return line
        raise StopIteration

    def expect(self, what: str) -> str:
        try:
            return next(self)
        except StopIteration:
            raise MeshParseError(f"unexpected end of file, expected {what}", self.number)


def _ints(line: str, lines: _Lines) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        raise MeshParseError(f"expected integers, got {line!r}", lines.number)


def _read_format(lines: _Lines) -> None:
    head = lines.expect("mesh format").split()
    if len(head) < 3 or not head[0].startswith("2.2"):
        raise MeshParseError(f"unsupported MSH version {' '.join(head)!r}", lines.number)
    if head[1] != "0":
        raise MeshParseError("binary MSH files are not supported", lines.number)
    if lines.expect("$EndMeshFormat") != "$EndMeshFormat":
        raise MeshParseError("missing $EndMeshFormat", lines.number)


def _read_nodes(lines: _Lines) -> tuple[np.ndarray, np.ndarray]:
    count = _ints(lines.expect("node count"), lines)
    if len(count) != 1 or count[0] < 0:
        raise MeshParseError("invalid node count", lines.number)
    ids = np.empty(count[0], dtype=np.int64)
    xy = np.empty((count[0], 2), dtype=np.float64)
    for k in range(count[0]):
        toks = lines.expect("node").split()
        if len(toks) != 4:
            raise MeshParseError(f"node line needs 4 fields, got {len(toks)}", lines.number)
        try:
            ids[k] = int(toks[0])
            xy[k] = (float(toks[1]), float(toks[2]))
        except ValueError:
            raise MeshParseError(f"malformed node line {' '.join(toks)!r}", lines.number)
    if lines.expect("$EndNodes") != "$EndNodes":
        raise MeshParseError("missing $EndNodes", lines.number)
    if len(np.unique(ids)) != len(ids):
        raise MeshParseError("duplicate node ids", lines.number)
    return ids, xy


def _read_elements(lines: _Lines) -> list[tuple[int, int, list[int], list[int]]]:
    count = _ints(lines.expect("element count"), lines)
    if len(count) != 1 or count[0] < 0:
        raise MeshParseError("invalid element count", lines.number)
    elements = []
    for _ in range(count[0]):
        toks = _ints(lines.expect("element"), lines)
        if len(toks) < 3:
            raise MeshParseError("element line too short", lines.number)
        etype, ntags = toks[1], toks[2]
        tags = toks[3 : 3 + ntags]
        nodes = toks[3 + ntags :]
        if etype == _LINE and len(nodes) == 2 or etype == _TRIANGLE and len(nodes) == 3:
            elements.append((lines.number, etype, tags, nodes))
        elif etype in (_LINE, _TRIANGLE):
            raise MeshParseError(f"element type {etype} with {len(nodes)} nodes", lines.number)
        else:
            raise MeshParseError(f"unsupported element type {etype}", lines.number)
    if lines.expect("$EndElements") != "$EndElements":
        raise MeshParseError("missing $EndElements", lines.number)
    return elements


def _skip_section(lines: _Lines, name: str) -> None:
    end = "$End" + name[1:]
    for line in lines:
        if line == end:
            return
    raise MeshParseError(f"missing {end}", lines.number)


def parse_msh(text: str, physical_tags: Mapping[int, BoundaryTag] | None = None) -> TriMesh:
    physical_tags = dict(physical_tags or DEFAULT_PHYSICAL_TAGS)
    lines = _Lines(text)
    seen_format = False
    node_ids: np.ndarray | None = None
    xy: np.ndarray | None = None
    elements: list[tuple[int, int, list[int], list[int]]] | None = None

    for line in lines:
        if line == "$MeshFormat":
            _read_format(lines)
            seen_format = True
        elif line == "$Nodes":
            node_ids, xy = _read_nodes(lines)
        elif line == "$Elements":
            elements = _read_elements(lines)
        elif line.startswith("$"):
            logger.debug("Skipping MSH section %s", line)
            _skip_section(lines, line)
        else:
            raise MeshParseError(f"unexpected content {line!r}", lines.number)

    if not seen_format:
        raise MeshParseError("missing $MeshFormat section")
    if node_ids is None or xy is None:
        raise MeshParseError("missing $Nodes section")
    if elements is None:
        raise MeshParseError("missing $Elements section")

    index = {int(nid): k for k, nid in enumerate(node_ids)}

    def resolve(nodes: list[int], at: int) -> list[int]:
        try:
            return [index[n] for n in nodes]
        except KeyError as exc:
            raise MeshParseError(f"element references unknown node {exc.args[0]}", at)

    triangles: list[list[int]] = []
    facets: list[list[int]] = []
    facet_tags: list[BoundaryTag] = []
    facet_lines: list[int] = []
    for at, etype, tags, nodes in elements:
        verts = resolve(nodes, at)
        if etype == _TRIANGLE:
            area = signed_areas(xy, np.array([verts]))[0]
            if area == 0.0:
                raise MeshParseError("degenerate (zero-area) triangle", at)
            if area < 0.0:
                verts = [verts[0], verts[2], verts[1]]
            triangles.append(verts)
        else:
            if not tags:
                raise MeshParseError("boundary line carries no physical tag", at)
            try:
                facet_tags.append(physical_tags[tags[0]])
            except KeyError:
                raise MeshParseError(f"unknown physical tag {tags[0]}", at)
            facets.append(verts)
            facet_lines.append(at)

    mesh = TriMesh(
        vertices=xy,
        triangles=np.array(triangles, dtype=np.int64).reshape(-1, 3),
        facets=np.array(facets, dtype=np.int64).reshape(-1, 2),
        facet_tags=tuple(facet_tags),
        vertex_ids=node_ids,
    )
    if mesh.n_triangles:
        for k, e in enumerate(mesh.facet_edges):
            if e < 0:
                raise MeshParseError(
                    "dangling boundary facet (not a triangle edge)", facet_lines[k]
                )
    try:
        return mesh.validate()
    except InvalidMeshError as exc:
        raise MeshParseError(f"invalid mesh: {exc}") from exc


def read_msh(path: Path | str, physical_tags: Mapping[int, BoundaryTag] | None = None) -> TriMesh:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except UnicodeDecodeError as exc:
        raise MeshParseError(f"{path} is not an ASCII MSH file: {exc}") from exc
    mesh = parse_msh(text, physical_tags)
    logger.debug("Read %s from %s", mesh, path)
    return mesh


def format_msh(mesh: TriMesh, physical_tags: Mapping[int, BoundaryTag] | None = None) -> str:
    physical_tags = dict(physical_tags or DEFAULT_PHYSICAL_TAGS)
    reverse = {tag: num for num, tag in sorted(physical_tags.items(), reverse=True)}
    ids = mesh.vertex_ids
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_vertices)]
    for nid, (x, y) in zip(ids, mesh.vertices):
        out.append(f"{int(nid)} {x:.17g} {y:.17g} 0")
    out += ["$EndNodes", "$Elements", str(len(mesh.facets) + mesh.n_triangles)]
    k = 1
    for (a, b), tag in zip(mesh.facets, mesh.facet_tags):
        phys = reverse[tag]
        out.append(f"{k} {_LINE} 2 {phys} {phys} {int(ids[a])} {int(ids[b])}")
        k += 1
    for a, b, c in mesh.triangles:
        out.append(f"{k} {_TRIANGLE} 2 0 0 {int(ids[a])} {int(ids[b])} {int(ids[c])}")
        k += 1
    out.append("$EndElements")
    return "\n".join(out) + "\n"


def write_msh(
    mesh: TriMesh, path: Path | str, physical_tags: Mapping[int, BoundaryTag] | None = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_msh(mesh, physical_tags), encoding="ascii")
    return path
