"""Advertiser satisfaction prediction: model, simulator and analysis tools."""

__version__ = "0.1.0"
