# controllers/__init__.py

# This file makes 'controllers' a package
