"""MeetDurian re-implementation: location-based hygiene game as a service."""

__version__ = "0.1.0"
