"""
Results Processor
Aggregates evaluation and experiment rows into summary tables
"""

import logging
import math
from collections import defaultdict
from typing import Any, Dict, List, Sequence

import numpy as np

logger = logging.getLogger(__name__)

EVALUATION_COLUMNS = ['strategy', 'closed_form_mse', 'empirical_mse', 'mse_ratio', 'relative_bias']


class ResultsProcessor:
    """Processes strategy evaluation and experiment sweep results"""

    def process(self, rows: List[Dict[str, Any]]) -> Dict[str, Any]:
        """
        Summarize a strategy evaluation table

        Args:
            rows: One dict per strategy with the EVALUATION_COLUMNS keys

        Returns:
            Dict with 'statistics', 'by_strategy' and the raw 'rows'
        """
        finite = [r for r in rows if math.isfinite(r['closed_form_mse'])]
        best = min(finite, key=lambda r: r['closed_form_mse']) if finite else None

        statistics = {
            'strategies_evaluated': len(rows),
            'finite_rows': len(finite),
            'infinite_rows': len(rows) - len(finite),
            'best_strategy': best['strategy'] if best else None,
            'best_closed_form_mse': best['closed_form_mse'] if best else math.inf,
        }
        if statistics['infinite_rows']:
            logger.warning(f"{statistics['infinite_rows']} strategies leave nonzero features "
                           f"unsupported (closed-form MSE is inf)")

        return {
            'statistics': statistics,
            'by_strategy': {r['strategy']: r for r in rows},
            'rows': rows,
        }

    def summarize_sweep(self, rows: List[Dict[str, Any]], metrics: Sequence[str],
                        group_by: str = 'strategy') -> Dict[str, Dict[str, Any]]:
        """
        Median and mean of each metric per group over a multi-seed sweep

        Args:
            rows: One dict per (seed, group)
            metrics: Keys to summarize
            group_by: Grouping key

        Returns:
            {group: {'count': n, '<metric>_median': ..., '<metric>_mean': ...}}
        """
        grouped = defaultdict(lambda: defaultdict(list))
        for row in rows:
            for metric in metrics:
                grouped[row[group_by]][metric].append(row[metric])

        summary = {}
        for group, values in grouped.items():
            entry: Dict[str, Any] = {'count': len(next(iter(values.values()), []))}
            for metric, series in values.items():
                series = np.asarray(series, dtype=float)
                entry[f"{metric}_median"] = float(np.median(series))
                entry[f"{metric}_mean"] = float(np.mean(series))
            summary[group] = entry
        return summary

    def format_evaluation(self, processed: Dict[str, Any]) -> str:
        """Console rendering of a processed evaluation"""
        lines = [f"{'STRATEGY':<16}{'CLOSED-FORM':>14}{'EMPIRICAL':>14}{'RATIO':>10}{'BIAS':>10}"]
        for row in processed['rows']:
            lines.append(
                f"{row['strategy']:<16}{row['closed_form_mse']:>14.6g}{row['empirical_mse']:>14.6g}"
                f"{row['mse_ratio']:>10.4f}{row['relative_bias']:>10.4f}"
            )
        stats = processed['statistics']
        lines.append("")
        lines.append(f"Best strategy: {stats['best_strategy']} "
                     f"(closed-form MSE {stats['best_closed_form_mse']:.6g})")
        if stats['infinite_rows']:
            lines.append(f"Unsupported strategies (MSE inf): {stats['infinite_rows']}")
        return "\n".join(lines)

    def format_sweep(self, summary: Dict[str, Dict[str, Any]]) -> str:
        """Console rendering of summarize_sweep output"""
        lines = []
        for group in sorted(summary):
            entry = summary[group]
            medians = ", ".join(
                f"{key[:-len('_median')]}={value:.4g}"
                for key, value in sorted(entry.items()) if key.endswith('_median')
            )
            lines.append(f"  {group} ({entry['count']} runs): median {medians}")
        return "\n".join(lines)
