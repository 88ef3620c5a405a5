"""AI-driven telephone survey orchestration and analytics."""

__version__ = "0.1.0"
