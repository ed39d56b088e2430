"""
Execution framework: configuration, strategy discovery, reports and CLI
"""
