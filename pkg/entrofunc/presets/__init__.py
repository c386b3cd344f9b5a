"""Bundled experiment configs, loadable by name."""
