"""Tests for services package."""
