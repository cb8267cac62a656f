"""Domain data types: core simplex types, RNG streams, oracle reports, experiment results."""
