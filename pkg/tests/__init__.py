"""Tests for speech-mender."""
