#!/usr/bin/env python3
"""
Main execution script for the graph resampling framework
"""

import logging
import sys
from pathlib import Path

# Add framework to path
sys.path.append(str(Path(__file__).parent))

from framework.cli import ResamplingCLI

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def main():
    """Main execution function"""
    sys.exit(ResamplingCLI().run())


if __name__ == '__main__':
    main()
