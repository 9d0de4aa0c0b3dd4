# This file makes 'backend' a Python package
