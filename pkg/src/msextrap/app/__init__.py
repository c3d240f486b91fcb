"""Command line interface, rainfall ingestion and result serialization."""
