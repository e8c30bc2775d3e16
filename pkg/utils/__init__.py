"""Utilities: settings, validation and logging setup"""
