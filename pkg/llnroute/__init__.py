"""LOADng vs AODV routing comparison for smart-grid (AMI) mesh networks."""

__version__ = "1.1.0"
