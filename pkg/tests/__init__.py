"""Test suite for FOCUS Scrub."""
