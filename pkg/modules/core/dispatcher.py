"""
Core Dispatcher Module
Handles routing of requests between the clustering, evaluation and IO services
"""

import logging
import uuid
from typing import Dict, Any, Optional, Callable, Protocol

from .errors import error_kind

logger = logging.getLogger(__name__)


class MessageHandler(Protocol):
    """Protocol for message handlers"""
    def __call__(self, request: Dict[str, Any]) -> Dict[str, Any]: ...


def error_response(request_id: Optional[str], error: str, kind: str = "runtime") -> Dict[str, Any]:
    """Create an error response"""
    return {
        "success": False,
        "data": None,
        "error": error,
        "error_kind": kind,
        "id": request_id
    }


def success_response(request_id: Optional[str], data: Any) -> Dict[str, Any]:
    """Create a success response"""
    return {
        "success": True,
        "data": data,
        "error": None,
        "error_kind": None,
        "id": request_id
    }


class Service:
    """Base for modules that answer dispatcher requests.

    Subclasses fill ``supported_actions`` with ``action -> handler(data)``.
    Handlers return plain data and raise on failure; ``process_request`` turns
    both outcomes into response messages.
    """

    def __init__(self):
        self.supported_actions: Dict[str, Callable[[Dict[str, Any]], Any]] = {}

    def process_request(self, request: Dict[str, Any]) -> Dict[str, Any]:
        """Process an incoming request for this service"""
        request_id = request.get("id")
        request_id = request_id if isinstance(request_id, str) else None
        action = request.get("action")
        if not action:
            return error_response(request_id, "No action specified", "validation")

        handler = self.supported_actions.get(action)
        if not handler:
            return error_response(request_id, f"Unsupported action: {action}", "validation")

        try:
            return success_response(request_id, handler(request.get("data", {})))
        except Exception as e:
            kind = error_kind(e)
            if kind == "runtime":
                logger.exception("Action %s failed", action)
            return error_response(request_id, str(e), kind)

    def __call__(self, request: Dict[str, Any]) -> Dict[str, Any]:
        return self.process_request(request)


class Dispatcher:
    def __init__(self):
        self._modules: Dict[str, MessageHandler] = {}

    def register_module(self, module_name: str, handler: MessageHandler) -> None:
        """Register a module's message handler"""
        self._modules[module_name] = handler

    def create_request(self, module: str, action: str, data: Dict[str, Any]) -> Dict[str, Any]:
        """Create a properly formatted request message"""
        return {
            "module": module,
            "action": action,
            "data": data,
            "id": str(uuid.uuid4())
        }

    def route_request(self, request: Dict[str, Any]) -> Dict[str, Any]:
        """Route a request to the appropriate module"""
        try:
            module = request.get("module")
            if not module:
                return error_response(request.get("id"), "No module specified", "validation")

            handler = self._modules.get(module)
            if not handler:
                return error_response(request.get("id"), f"Module {module} not found", "validation")

            logger.debug("Routing %s.%s", module, request.get("action"))
            return handler(request)

        except Exception as e:
            return error_response(request.get("id"), str(e), error_kind(e))
