"""The autoencoder and classifier experiments."""
