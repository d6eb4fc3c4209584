"""Test package for poncelet-fq."""
