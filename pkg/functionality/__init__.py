"""Namespace package for application functionality modules.

The dual_kge subpackage contains the knowledge-graph embedding toolkit.
"""
