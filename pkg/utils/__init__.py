# This file makes Python treat the 'utils' directory as a package.
