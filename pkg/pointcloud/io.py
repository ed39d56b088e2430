"""
Point Cloud I/O
Readers and writers for xyz-csv and ascii PLY point clouds
"""

import csv
import logging
import math
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .core import PointCloud
from .errors import EmptyCloud, ParseError

logger = logging.getLogger(__name__)

FORMATS = ('xyz-csv', 'ascii-ply')

_EXTENSIONS = {
    '.csv': 'xyz-csv',
    '.xyz': 'xyz-csv',
    '.txt': 'xyz-csv',
    '.ply': 'ascii-ply',
}


def infer_format(path, format: Optional[str] = None) -> str:
    """Resolve the file format from an explicit name or the file extension"""
    if format:
        if format not in FORMATS:
            raise ParseError(f"unknown point cloud format '{format}' (expected one of {FORMATS})")
        return format
    suffix = Path(path).suffix.lower()
    if suffix not in _EXTENSIONS:
        raise ParseError(f"cannot infer format from extension '{suffix}'")
    return _EXTENSIONS[suffix]


def load_cloud(path, format: Optional[str] = None) -> PointCloud:
    """
    Load a point cloud from disk

    Args:
        path: File path
        format: 'xyz-csv' or 'ascii-ply'; inferred from the extension when omitted

    Returns:
        PointCloud with row order preserved
    """
    path = Path(path)
    fmt = infer_format(path, format)
    if fmt == 'xyz-csv':
        cloud = _load_csv(path)
    else:
        cloud = _load_ply(path)
    logger.info(f"Loaded {cloud.n_points} points ({cloud.n_attrs} attributes) from {path}")
    return cloud


def save_cloud(cloud: PointCloud, path, format: Optional[str] = None, header: bool = True):
    """
    Write a point cloud with 17 significant digits per value

    Args:
        cloud: Cloud to write
        path: Output path
        format: 'xyz-csv' or 'ascii-ply'; inferred from the extension when omitted
        header: Emit a header row for xyz-csv
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = infer_format(path, format)
    names = ['x', 'y', 'z'] + list(cloud.attr_names)
    rows = cloud.matrix

    if fmt == 'xyz-csv':
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            if header:
                writer.writerow(names)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    else:
        with open(path, 'w') as f:
            f.write('ply\n')
            f.write('format ascii 1.0\n')
            f.write(f'element vertex {cloud.n_points:d}\n')
            for name in names:
                f.write(f'property double {name}\n')
            f.write('end_header\n')
            for row in rows:
                f.write(' '.join(_fmt(v) for v in row) + '\n')

    logger.info(f"Wrote {cloud.n_points} points to {path}")


def _fmt(value: float) -> str:
    return format(float(value), '.17g')


def _to_float(text: str) -> Optional[float]:
    try:
        return float(text)
    except ValueError:
        return None


def _check_values(fields: List[str], values: List[Optional[float]], line_no: int):
    for text, value in zip(fields, values):
        if value is None:
            raise ParseError(f"non-numeric field '{text}'", line=line_no)
        if not math.isfinite(value):
            raise ParseError(f"non-finite value '{text}'", line=line_no)


def _load_csv(path: Path) -> PointCloud:
    rows: List[List[float]] = []
    names: List[str] = []
    width = None

    with open(path, 'r', newline='') as f:
        reader = csv.reader(f)
        for line_no, fields in enumerate(reader, start=1):
            fields = [x.strip() for x in fields]
            if not fields or all(x == '' for x in fields) or fields[0].startswith('#'):
                continue

            values = [_to_float(x) for x in fields]
            if not rows and not names and all(v is None for v in values):
                names = fields
                continue
            _check_values(fields, values, line_no)
            if len(values) < 3:
                raise ParseError(f"expected at least 3 columns, got {len(values)}", line=line_no)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(f"expected {width} columns, got {len(values)}", line=line_no)
            rows.append(values)

    if not rows:
        raise EmptyCloud(f"no points in {path}")

    data = np.array(rows, dtype=float)
    attr_names = names[3:] if len(names) == data.shape[1] else []
    return PointCloud(data[:, :3], data[:, 3:], attr_names)


def _parse_ply_header(lines: List[str]) -> Tuple[List[Tuple[str, int, List[str]]], int]:
    """Return [(element, count, property names)] and the first body line index"""
    if not lines or lines[0].strip() != 'ply':
        raise ParseError("missing 'ply' magic", line=1)

    elements: List[Tuple[str, int, List[str]]] = []
    for idx, raw in enumerate(lines[1:], start=1):
        line_no = idx + 1
        tokens = raw.split()
        if not tokens or tokens[0] in ('comment', 'obj_info'):
            continue
        keyword = tokens[0]
        if keyword == 'format':
            if len(tokens) < 2 or tokens[1] != 'ascii':
                raise ParseError(f"unsupported PLY format '{' '.join(tokens[1:])}'", line=line_no)
        elif keyword == 'element':
            if len(tokens) != 3:
                raise ParseError("malformed element line", line=line_no)
            try:
                count = int(tokens[2])
            except ValueError:
                raise ParseError(f"bad element count '{tokens[2]}'", line=line_no)
            elements.append((tokens[1], count, []))
        elif keyword == 'property':
            if not elements:
                raise ParseError("property before any element", line=line_no)
            if len(tokens) >= 2 and tokens[1] == 'list':
                if elements[-1][0] == 'vertex':
                    raise ParseError("list properties on vertices are not supported", line=line_no)
                elements[-1][2].append('__list__')
            elif len(tokens) == 3:
                elements[-1][2].append(tokens[2])
            else:
                raise ParseError("malformed property line", line=line_no)
        elif keyword == 'end_header':
            return elements, idx + 1
        else:
            raise ParseError(f"unexpected header keyword '{keyword}'", line=line_no)

    raise ParseError("missing 'end_header'", line=len(lines))


def _load_ply(path: Path) -> PointCloud:
    with open(path, 'r') as f:
        lines = f.read().splitlines()

    elements, body_start = _parse_ply_header(lines)
    cursor = body_start
    vertex_rows = None
    vertex_props: List[str] = []

    for name, count, props in elements:
        if name != 'vertex':
            # skip other element bodies (faces, edges)
            cursor += count
            continue
        for p in ('x', 'y', 'z'):
            if p not in props:
                raise ParseError(f"vertex element lacks property '{p}'", line=body_start)
        vertex_props = props
        vertex_rows = []
        for offset in range(count):
            line_no = cursor + offset + 1
            if cursor + offset >= len(lines):
                raise ParseError(f"expected {count} vertices, file ended", line=line_no)
            tokens = lines[cursor + offset].split()
            if len(tokens) != len(props):
                raise ParseError(f"expected {len(props)} values, got {len(tokens)}", line=line_no)
            values = [_to_float(t) for t in tokens]
            _check_values(tokens, values, line_no)
            vertex_rows.append(values)
        cursor += count

    if not vertex_rows:
        raise EmptyCloud(f"no vertices in {path}")

    data = np.array(vertex_rows, dtype=float)
    xyz = [vertex_props.index(p) for p in ('x', 'y', 'z')]
    extra = [i for i, p in enumerate(vertex_props) if p not in ('x', 'y', 'z')]
    return PointCloud(data[:, xyz], data[:, extra], [vertex_props[i] for i in extra])
