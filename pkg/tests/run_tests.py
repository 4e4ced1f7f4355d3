#!/usr/bin/env python3
"""
Test Runner for BasketOptimizer
Discovers every test_*.py module in this directory; the exit status is 0 only when all pass
"""

import sys
import os
import unittest

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def run_all_tests() -> bool:
    """Discover and run all test suites"""
    print("🚀 BasketOptimizer Test Suite")
    suite = unittest.TestLoader().discover(os.path.dirname(os.path.abspath(__file__)), pattern='test_*.py')
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    print("✅ ALL TESTS PASSED!" if result.wasSuccessful() else "❌ SOME TESTS FAILED")
    return result.wasSuccessful()


if __name__ == '__main__':
    sys.exit(0 if run_all_tests() else 1)
