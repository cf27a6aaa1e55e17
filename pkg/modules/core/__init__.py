"""
Core Module
Dispatcher and shared error types
"""

from .dispatcher import Dispatcher, Service, error_response, success_response
from . import errors

__all__ = ["Dispatcher", "Service", "error_response", "success_response", "errors"]
