"""gradps : stéréophotométrie assistée par gradient d'image."""

__version__ = "0.1.0"
