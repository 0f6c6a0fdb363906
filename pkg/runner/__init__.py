"""Command-line driver: model loading, dispatch and report writing."""
