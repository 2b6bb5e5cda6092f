"""Scheduling electric vehicles in mobility-on-demand schemes."""
