"""Oracles and drivers: local-consistency stepper, global-consistency stress,
linearizability checker, and the benchmark."""
