"""
Strategy Registry
Auto-discovers and manages resampling strategy classes
"""

import importlib.util
import inspect
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Type

from strategies.base_strategy import ResamplingStrategy

logger = logging.getLogger(__name__)

DEFAULT_STRATEGY_DIR = Path(__file__).parent.parent / 'strategies'


class StrategyRegistry:
    """Registry for resampling strategy classes, keyed by their name attribute"""

    def __init__(self):
        self.strategies: Dict[str, Type[ResamplingStrategy]] = {}

    def discover(self, strategy_dir: Optional[str] = None) -> Dict[str, Type[ResamplingStrategy]]:
        """
        Discover strategy classes in directory

        Args:
            strategy_dir: Directory containing strategy modules (defaults to
                the bundled strategies package)

        Returns:
            Dictionary of strategy classes by name
        """
        strategy_path = Path(strategy_dir) if strategy_dir else DEFAULT_STRATEGY_DIR
        package = strategy_path.name

        for py_file in sorted(strategy_path.glob('*.py')):
            if py_file.name.startswith('__') or py_file.stem == 'base_strategy':
                continue

            dotted_path = f"{package}.{py_file.stem}"
            try:
                module = sys.modules.get(dotted_path)
                if module is None:
                    spec = importlib.util.spec_from_file_location(dotted_path, py_file)
                    module = importlib.util.module_from_spec(spec)
                    sys.modules[dotted_path] = module
                    spec.loader.exec_module(module)

                for _, obj in inspect.getmembers(module, inspect.isclass):
                    if (issubclass(obj, ResamplingStrategy) and
                            not inspect.isabstract(obj) and obj.name):
                        if obj.name in self.strategies and self.strategies[obj.name] is not obj:
                            logger.warning(f"Strategy '{obj.name}' from {py_file.name} "
                                           f"replaces {self.strategies[obj.name].__name__}")
                        self.strategies[obj.name] = obj
                        logger.debug(f"Registered strategy: {obj.name} ({obj.__name__})")

            except Exception as e:
                logger.error(f"Error loading {py_file}: {str(e)}")

        logger.info(f"Discovered {len(self.strategies)} strategies")
        return self.strategies

    def get_strategy(self, name: str, settings: Optional[Dict[str, Any]] = None) -> ResamplingStrategy:
        """
        Get a strategy instance

        Args:
            name: Registered strategy name
            settings: Strategy settings

        Returns:
            Strategy instance
        """
        if not self.strategies:
            self.discover()
        if name not in self.strategies:
            raise ValueError(f"Unknown strategy: {name} (available: {', '.join(self.list_strategies())})")
        return self.strategies[name](settings)

    def list_strategies(self) -> List[str]:
        """List registered strategy names"""
        return sorted(self.strategies)
