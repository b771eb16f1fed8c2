"""Cover times of lambda-biased random walks on Galton-Watson trees."""

__version__ = "0.1.0"
