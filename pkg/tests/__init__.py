"""Tests unitaires."""
