# plots/__init__.py

# This file makes 'plots' a package
