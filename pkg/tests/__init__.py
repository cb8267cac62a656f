"""Test suite for icbandit."""
