"""Tests for deepq-fuzzer."""
