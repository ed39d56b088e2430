"""
Bank Loader
Loads filter-bank subband specifications from key=value files
"""

import logging
import re
from collections import defaultdict
from pathlib import Path
from typing import Any, Dict, List

from pointcloud.errors import BadParams, ParseError
from pointcloud.filterbank import SubbandSpec

logger = logging.getLogger(__name__)

_KEY = re.compile(r'^subband\.(\d+)\.([a-z_]+)$')

_FIELDS = {
    'filter': 'filter_kind',
    'alpha': 'alpha',
    'bandwidth': 'bandwidth',
    'use_filtered': 'use_filtered_points',
    'beta': 'beta',
}

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


class BankLoader:
    """
    Loads subband specifications

    Grammar, one entry per line:

        # comment
        subband.<i>.filter = allpass | haar-highpass | haar-lowpass | ideal-lowpass
        subband.<i>.alpha = <ratio in (0, 1]>
        subband.<i>.bandwidth = <int>        (ideal-lowpass only)
        subband.<i>.use_filtered = true | false
        subband.<i>.beta = <floor in [0, 1]>

    Subbands are returned in ascending order of <i>.
    """

    def __init__(self, bank_file: str):
        """
        Initialize bank loader

        Args:
            bank_file: Path to the bank specification file
        """
        self.bank_file = Path(bank_file)

    def load(self) -> List[SubbandSpec]:
        """
        Parse the bank file

        Returns:
            List of SubbandSpec
        """
        entries: Dict[int, Dict[str, Any]] = defaultdict(dict)
        with open(self.bank_file, 'r') as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.split('#', 1)[0].strip()
                if not line:
                    continue
                if '=' not in line:
                    raise ParseError(f"expected key = value, got '{line}'", lineno)

                key, value = (part.strip() for part in line.split('=', 1))
                match = _KEY.match(key)
                if not match or match.group(2) not in _FIELDS:
                    raise ParseError(f"unknown key '{key}'", lineno)
                index, field = int(match.group(1)), _FIELDS[match.group(2)]
                if field in entries[index]:
                    raise ParseError(f"duplicate key '{key}'", lineno)
                entries[index][field] = self._convert(field, value, lineno)

        if not entries:
            raise BadParams(f"{self.bank_file} defines no subbands")

        specs = []
        for index in sorted(entries):
            fields = entries[index]
            missing = [name for name in ('filter_kind', 'alpha') if name not in fields]
            if missing:
                raise BadParams(f"subband {index} is missing {', '.join(missing)}")
            specs.append(SubbandSpec(**fields))

        logger.info(f"Loaded {len(specs)} subbands from {self.bank_file.name}")
        return specs

    @staticmethod
    def _convert(field: str, value: str, lineno: int) -> Any:
        try:
            if field == 'filter_kind':
                return value
            if field == 'bandwidth':
                return int(value)
            if field == 'use_filtered_points':
                lowered = value.lower()
                if lowered in _TRUE:
                    return True
                if lowered in _FALSE:
                    return False
                raise ValueError(value)
            return float(value)
        except ValueError:
            raise ParseError(f"invalid value '{value}' for {field}", lineno) from None
