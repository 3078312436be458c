"""Coverage-guided fuzzing workbench for a table-driven instruction selector."""

__version__ = "0.1.0"
