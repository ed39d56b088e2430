"""
Resampling strategy plugins; discovered by framework.strategy_registry
"""
