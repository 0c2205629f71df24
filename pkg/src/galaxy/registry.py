"""Function registry backing the forest's function dimension.

Two binding forms:

* ``"<space>:<node>"``: direct registrations made in-process (built-in spaces);
* ``"mod:<module>:<function>"``: resolved by locating ``<module>.py`` on the
  configured module search paths and importing it.  Scaffolded spaces use this
  form, and the boot self-check can repair a broken search path by consulting
  the owning node's design descriptor.
"""

from __future__ import annotations

import importlib.util
import threading
from pathlib import Path
from typing import Callable


class BindingError(KeyError):
    pass


class FunctionRegistry:
    def __init__(self, module_search_paths: list[str] | None = None) -> None:
        self._direct: dict[str, Callable] = {}
        self.module_search_paths: list[str] = list(module_search_paths or [])
        self._module_cache: dict[str, object] = {}
        self._lock = threading.Lock()

    def register(self, key: str, func: Callable) -> None:
        with self._lock:
            self._direct[key] = func

    def unregister(self, key: str) -> None:
        with self._lock:
            self._direct.pop(key, None)

    def keys(self) -> list[str]:
        with self._lock:
            return sorted(self._direct)

    def resolves(self, key: str) -> bool:
        try:
            self.resolve(key)
            return True
        except BindingError:
            return False

    def resolve(self, key: str) -> Callable:
        with self._lock:
            if key in self._direct:
                return self._direct[key]
        if key.startswith("mod:"):
            return self._resolve_module_binding(key)
        raise BindingError(f"unresolvable function binding {key!r}")

    def invalidate_module_cache(self) -> None:
        with self._lock:
            self._module_cache.clear()

    def _resolve_module_binding(self, key: str) -> Callable:
        try:
            _, module_name, func_name = key.split(":", 2)
        except ValueError:
            raise BindingError(f"malformed module binding {key!r}") from None
        module = self._load_module(module_name)
        if module is None or not hasattr(module, func_name):
            raise BindingError(f"unresolvable function binding {key!r}")
        return getattr(module, func_name)

    def _load_module(self, module_name: str):
        with self._lock:
            if module_name in self._module_cache:
                return self._module_cache[module_name]
            search_paths = list(self.module_search_paths)
        for root in search_paths:
            candidate = Path(root) / f"{module_name}.py"
            if candidate.is_file():
                spec = importlib.util.spec_from_file_location(
                    f"galaxy_space_{module_name}", candidate)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)
                with self._lock:
                    self._module_cache[module_name] = module
                return module
        return None
