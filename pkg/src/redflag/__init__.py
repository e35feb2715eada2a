"""Red-flag feature encoding for transaction monitoring.

Synthesizes labeled fan-out scenarios, renders pattern prompts, extracts
window features through interchangeable backends, quantifies them, and
measures the lift they add to a simple risk classifier.
"""

__version__ = "0.1.0"
