#!/usr/bin/env python3
"""
Random Multiplicative Function Lab
Run `python rmf_lab.py --help` for the list of commands
"""
import sys

from src.cli import cli_main

if __name__ == '__main__':
    try:
        sys.exit(cli_main())
    except KeyboardInterrupt:
        print("\n\nInterrupted by user", file=sys.stderr)
        sys.exit(1)
