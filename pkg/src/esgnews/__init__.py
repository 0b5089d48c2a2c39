"""ESG signal extraction from company news: pipeline stages and dataset analytics."""

__version__ = "0.1.0"
