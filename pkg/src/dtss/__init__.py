"""dtss: digital-twin security platform for public-space protection.

Simulated world -> observation streams -> twin model -> surrogate threat
detection -> composite events, attack prediction, and Monte-Carlo
vulnerability assessment, behind a CLI and an HTTP gateway.
"""

__version__ = "0.1.0"
