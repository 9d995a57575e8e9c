"""
Unit tests package
"""
