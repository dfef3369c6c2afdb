"""Supersonic Chaplygin-gas flow past a conical wing with a Lambda-shaped cross section."""
