"""
Logix Platform Test Suite
"""
