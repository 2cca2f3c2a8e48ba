"""Configuration, experiment drivers, metrics and file outputs."""
