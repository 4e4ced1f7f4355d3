#!/usr/bin/env python3
"""
BasketOptimizer Main Application
Optimal tuning parameters for Bayesian basket trial designs with information borrowing
"""

import sys

from basketopt.cli import main

if __name__ == "__main__":
    sys.exit(main())
