"""Settings, command discovery and TSV output."""
