"""Batch plotting scripts for refreshrl run directories.

Read-only consumers of the engine's CSV schemas: eval.csv for learning
curves (mean episodic reward across seeds with a standard-deviation band)
and metrics.csv for the diagnostics panels.  Run directories are never
modified.
"""

__version__ = "0.1.0"
