"""Close-enough TSP solver built on the pair-center heuristic."""
