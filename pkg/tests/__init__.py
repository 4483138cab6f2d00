"""Tests for spane-kit."""
