"""Scenario configuration, experiment orchestration and the command-line interface."""
