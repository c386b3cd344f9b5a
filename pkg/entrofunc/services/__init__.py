"""Estimation, inference, oracle and simulation services."""
