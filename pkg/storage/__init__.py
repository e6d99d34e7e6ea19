# Storage module for evaluation episode logs
