"""Value-aligned blending, guaranteed delivery and plan ROI attribution."""

__version__ = "0.1.0"
