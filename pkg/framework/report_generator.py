"""
Report Generator
Writes point clouds, per-point CSVs, tables, JSON reports and run manifests
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from pointcloud.core import PointCloud
from pointcloud.graph import SparseGraph, dump_edges
from pointcloud.io import save_cloud
from pointcloud.resampling import (
    ResampleResult,
    ResamplingDistribution,
    write_distribution,
    write_draws,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), '.17g')
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


class ReportGenerator:
    """
    Writes every artifact of a run into one output directory

    Each written file is remembered so the manifest can list it. Nothing
    time-dependent is written, so a rerun with the same configuration
    produces byte-identical files.
    """

    def __init__(self, output_dir: str):
        """
        Initialize report generator

        Args:
            output_dir: Directory receiving all outputs
        """
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.outputs: List[str] = []

    def _path(self, name: str) -> Path:
        if name not in self.outputs:
            self.outputs.append(name)
        return self.output_dir / name

    def write_cloud(self, cloud: PointCloud, name: str, format: Optional[str] = None) -> Path:
        path = self._path(name)
        save_cloud(cloud, path, format)
        return path

    def write_distribution(self, dist: ResamplingDistribution, name: str = 'distribution.csv') -> Path:
        path = self._path(name)
        write_distribution(dist, path)
        return path

    def write_draws(self, result: ResampleResult, name: str = 'draws.csv') -> Path:
        path = self._path(name)
        write_draws(result, path)
        return path

    def write_edges(self, graph: SparseGraph, name: str = 'graph_edges.csv') -> Path:
        path = self._path(name)
        dump_edges(graph, path)
        return path

    def write_scores(self, scores: np.ndarray, name: str, column: str = 'score') -> Path:
        """Per-point CSV with columns index, <column>"""
        rows = ({'index': i, column: v} for i, v in enumerate(np.asarray(scores).ravel()))
        return self.write_table(rows, ['index', column], name)

    def write_table(self, rows: Iterable[Dict[str, Any]], columns: Sequence[str], name: str) -> Path:
        path = self._path(name)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_fmt(row.get(column, '')) for column in columns])
        logger.info(f"Table written to {path}")
        return path

    def write_json(self, data: Dict[str, Any], name: str) -> Path:
        path = self._path(name)
        with open(path, 'w') as f:
            json.dump(data, f, indent=2, sort_keys=True, default=_json_default)
            f.write('\n')
        logger.info(f"JSON report saved to {path}")
        return path

    def write_manifest(self, command: str, params: Dict[str, Any], seed: Optional[int],
                       inputs: Sequence[str] = ()) -> Path:
        """
        Record what is needed to rerun the command bit-exactly

        Args:
            command: Subcommand name
            params: Merged run parameters
            seed: Root seed
            inputs: Input files; each is hashed with SHA-256

        Returns:
            Path of the manifest
        """
        manifest = {
            'command': command,
            'params': params,
            'seed': seed,
            'inputs': {str(p): sha256_file(p) for p in inputs if p},
            'outputs': sorted(self.outputs),
        }
        return self.write_json(manifest, MANIFEST_NAME)
