# This file makes Python treat the 'graphs' directory as a package.
