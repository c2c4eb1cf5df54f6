#!/usr/bin/env python3
"""
psearch - Main Entry Point
Solvers for probabilistic physical search on graphs
"""

import sys
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Add package to path
sys.path.insert(0, '.')

from psearch.cli import main


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        logging.info("Stopped by user")
        sys.exit(130)
