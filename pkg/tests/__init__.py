"""Tests for lerw-lab."""
