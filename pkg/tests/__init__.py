# Test package for BasketOptimizer
