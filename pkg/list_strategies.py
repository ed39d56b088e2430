#!/usr/bin/env python3
"""
List available resampling strategies
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent))

from framework.strategy_registry import StrategyRegistry

registry = StrategyRegistry()
strategies = registry.discover()

print(f"Available strategies ({len(strategies)} total):\n")

for name in registry.list_strategies():
    strategy_class = strategies[name]
    print(f"{name}: {strategy_class.description}")
    print(f"  Class: {strategy_class.__name__} ({strategy_class.__module__})")
    print(f"  Needs graph: {'yes' if strategy_class.requires_graph else 'no'}")
    print()
