"""Global optimization of Hermitian bilinear programs."""
