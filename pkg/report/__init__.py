"""Post-processing of run records: curves, interference, retention and CSV files."""
