"""Toy recognizer: EP versus frame-wise training on synthetically misaligned frames."""
