"""Utils module: metrics, model files and artifact export"""
