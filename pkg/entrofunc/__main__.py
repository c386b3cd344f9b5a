#!/usr/bin/env python3
"""
entrofunc package main entry point.

This allows running the CLI with: python -m entrofunc
"""

import sys

from entrofunc.cli import main

if __name__ == "__main__":
    sys.exit(main())
