"""Scene Narrator package."""
