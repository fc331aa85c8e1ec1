# utils/__init__.py

# This file makes 'utils' a package
