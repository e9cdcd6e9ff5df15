# This file makes Python treat the 'tensor' directory as a package.
