"""Trace-transfer diagonal sweeping solver for the Helmholtz equation with PML."""
