"""Structure-guided masked graph autoencoder toolkit."""

__version__ = "0.1.0"
