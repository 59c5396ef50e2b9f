"""Software twin of a remotely supervised gas reduction system.

Subsystems: signal map (panel signals and controller pins), 8N1 serial
framing and a simulated line, the single-character control protocol, a
boiler plant simulation, the controller-node bridge, and an authenticated
supervisory gateway with automatic operation and a server-push stream.
"""

__version__ = "0.1.0"
