"""Command-line orchestration, configuration, persistence and the verify suite."""
