"""Engine package: the commutative model, its extensions and the operator model."""
