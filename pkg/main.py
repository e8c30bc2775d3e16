#!/usr/bin/env python3
"""
CORTEX Surrogates - Main Application Entry Point
Fits cost-sensitive surrogate trees to black-box predictions, extracts
IF-THEN rules and compares them against a class-weighted decision tree.
"""

import sys
import os

# Add project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cli.main_command import main

if __name__ == "__main__":
    sys.exit(main())
