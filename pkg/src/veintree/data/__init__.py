"""Bundled data files (trunk keypoint templates)."""
