"""Tests for svepath."""
