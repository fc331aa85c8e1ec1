# models/__init__.py

# This file makes 'models' a package
