"""Command-line handlers, output writers and plots."""
