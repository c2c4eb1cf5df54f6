"""Utils module"""
from .trace import SearchTrace

__all__ = ['SearchTrace']
