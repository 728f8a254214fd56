"""Semianalytic mode solver for coaxial step-index PEC waveguides."""
