"""Core engines: datasets, trees, rules, metrics, statistics and experiments"""
