"""Monte Carlo trials and the degree-distribution designer."""
