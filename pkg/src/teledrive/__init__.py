"""Human-in-the-loop vehicle teleoperation stack with synthetic signals.

Subsystems: hot-zone overlay control law, intent decode pipeline (feature
extraction, latent-variable cursor regression, discriminant+Markov click
classifier), deterministic kinematic vehicle and world simulation, the
teleoperation link with clock sync and safety supervision, infraction
scoring, GO/NO-GO reaction-time harness, statistics, and session
orchestration.
"""

__version__ = "0.1.0"
