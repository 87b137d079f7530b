"""
Module entry point for running the src package as a module

Usage:
    python -m src <subcommand> [options]
"""

from .cli import main

if __name__ == '__main__':
    main()
