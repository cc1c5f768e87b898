"""Population-mean estimators using auxiliary variables under measurement error."""

__version__ = "0.1.0"
