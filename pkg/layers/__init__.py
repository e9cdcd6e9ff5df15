# This file makes Python treat the 'layers' directory as a package.
