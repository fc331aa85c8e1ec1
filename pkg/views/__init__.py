# views/__init__.py

# This file makes 'views' a package
