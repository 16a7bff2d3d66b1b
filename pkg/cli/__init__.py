"""Command-line front end for the reduction engine."""
