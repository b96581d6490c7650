"""phiscan: residual ePHI scanner for extracted Android medical-app data trees."""

__version__ = "0.1.0"
