"""Text-only interviewing agent: probing questions, a growing knowledge
base mined from the user's answers, salience-ranked substitution into
response templates, and emotionally annotated intent output."""

__version__ = "0.1.0"
