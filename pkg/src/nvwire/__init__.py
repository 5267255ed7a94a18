"""Plasmonic nanowire coupling of single NV centres and photon-statistics tools."""
