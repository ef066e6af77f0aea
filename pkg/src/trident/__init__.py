"""Triple-identity authentication: credential+IMEI+IMSI identities verified by
locally generated identifiers drawn from a matrix-like open hash."""

__version__ = "0.1.0"
