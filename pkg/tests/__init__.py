"""Tests for the surjunctive workbench."""
