"""Adversarial-queueing lab for locally bursty adversaries."""
