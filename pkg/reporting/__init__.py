# This file makes Python treat the 'reporting' directory as a package.
