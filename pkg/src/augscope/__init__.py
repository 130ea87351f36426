"""Oversampling in input and latent space, inspectable classifiers, and DA diagnostics."""

__version__ = "0.1.0"
