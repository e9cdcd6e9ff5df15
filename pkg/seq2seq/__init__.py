# This file makes Python treat the 'seq2seq' directory as a package.
