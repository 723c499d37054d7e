"""Gapped piecewise-linear spring networks for nonlinear restoring forces."""
