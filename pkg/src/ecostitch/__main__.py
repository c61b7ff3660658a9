#!/usr/bin/env python3
"""
Entry point for ``python -m ecostitch``, e.g.:
python -m ecostitch resolve --corpus fig1 --root D:1.0
"""

import sys

from ecostitch.cli import main

if __name__ == "__main__":
    sys.exit(main())
