"""Service layer: algorithms, environments, oracles and the experiment harness."""
