"""Acrobot and pendubot swing-up: plant model, SAC training, SNES fine-tuning and scoring."""
