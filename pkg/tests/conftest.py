"""Shared pytest setup."""

from src.log import configure_logging

configure_logging("WARNING")
