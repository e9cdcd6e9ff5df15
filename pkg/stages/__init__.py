# This file is intentionally blank to mark the 'stages' directory as a Python package.
