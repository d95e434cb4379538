"""Distance spectra, finite-length inactivation analysis and failure-probability bounds."""
