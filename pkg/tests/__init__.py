"""Test suite for mural-forest"""
