"""Client/server protocol, simulated handsets and attack scenarios."""
